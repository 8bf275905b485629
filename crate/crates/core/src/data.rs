//! Event logs, follower networks, stage windows and per-user state features.
//!
//! Users are dense 0-based indices. Times are hours. The follower matrix uses
//! the convention `G[i][j] = 1` iff user `j` follows user `i`, so a post by `i`
//! is seen by every `j` in row `i`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{DcplError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Tweet,
    Retweet,
    Like,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "T")]
    True,
    #[serde(rename = "F")]
    Fake,
}

/// One timestamped activity. `target` is the author being retweeted or liked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub user: usize,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
}

impl Event {
    pub fn tweet(t: f64, user: usize, label: Label) -> Self {
        Event {
            t,
            user,
            kind: Kind::Tweet,
            label: Some(label),
            target: None,
        }
    }

    pub fn retweet(t: f64, user: usize, label: Label, target: usize) -> Self {
        Event {
            t,
            user,
            kind: Kind::Retweet,
            label: Some(label),
            target: Some(target),
        }
    }

    pub fn like(t: f64, user: usize, target: usize) -> Self {
        Event {
            t,
            user,
            kind: Kind::Like,
            label: None,
            target: Some(target),
        }
    }

    /// Checks the structural invariants; `n_users` enables range checks.
    pub fn validate(&self, n_users: Option<usize>) -> std::result::Result<(), String> {
        if !self.t.is_finite() || self.t < 0.0 {
            return Err(format!("time must be finite and nonnegative, got {}", self.t));
        }
        match self.kind {
            Kind::Tweet => {
                if self.target.is_some() {
                    return Err("tweet must not carry a target".into());
                }
                if self.label.is_none() {
                    return Err("tweet requires label".into());
                }
            }
            Kind::Retweet => {
                if self.target.is_none() {
                    return Err("retweet requires target".into());
                }
                if self.label.is_none() {
                    return Err("retweet requires label".into());
                }
            }
            Kind::Like => {
                if self.target.is_none() {
                    return Err("like requires target".into());
                }
                if self.label.is_some() {
                    return Err("like must not carry a label".into());
                }
            }
        }
        if let Some(target) = self.target {
            if target == self.user {
                return Err(format!("user {} cannot target itself", self.user));
            }
        }
        if let Some(n) = n_users {
            if self.user >= n {
                return Err(format!("user {} out of range (N = {n})", self.user));
            }
            if let Some(target) = self.target {
                if target >= n {
                    return Err(format!("target {target} out of range (N = {n})"));
                }
            }
        }
        Ok(())
    }
}

/// Time-ordered sequence of events.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    /// Builds a log, sorting by time. Equal times keep their input order.
    pub fn new(mut events: Vec<Event>) -> Self {
        events.sort_by(|a, b| a.t.total_cmp(&b.t));
        EventLog { events }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Event> {
        self.events.iter()
    }

    /// Events with `t0 <= t < t1`.
    pub fn window(&self, t0: f64, t1: f64) -> &[Event] {
        let lo = self.events.partition_point(|e| e.t < t0);
        let hi = self.events.partition_point(|e| e.t < t1);
        &self.events[lo..hi.max(lo)]
    }

    /// Events strictly before `t`.
    pub fn before(&self, t: f64) -> &[Event] {
        let hi = self.events.partition_point(|e| e.t < t);
        &self.events[..hi]
    }

    /// Concatenates two logs and re-sorts.
    pub fn merged(&self, other: &EventLog) -> EventLog {
        let mut events = self.events.clone();
        events.extend_from_slice(&other.events);
        EventLog::new(events)
    }

    pub fn max_user(&self) -> Option<usize> {
        self.events
            .iter()
            .map(|e| e.user.max(e.target.unwrap_or(0)))
            .max()
    }

    pub fn from_reader<R: BufRead>(reader: R, origin: &Path, n_users: Option<usize>) -> Result<Self> {
        let mut events = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| DcplError::io(origin, e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let event: Event = serde_json::from_str(trimmed).map_err(|e| DcplError::Parse {
                path: origin.to_path_buf(),
                line: line_no,
                message: e.to_string(),
            })?;
            event.validate(n_users).map_err(|message| DcplError::Parse {
                path: origin.to_path_buf(),
                line: line_no,
                message,
            })?;
            events.push(event);
        }
        Ok(EventLog::new(events))
    }

    /// Writes one JSON object per line. Times use the shortest representation
    /// that round-trips exactly.
    pub fn write_to<W: Write>(&self, mut writer: W) -> Result<()> {
        for event in &self.events {
            serde_json::to_writer(&mut writer, event)?;
            writer
                .write_all(b"\n")
                .map_err(|e| DcplError::io("<writer>", e))?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| DcplError::io(path, e))?;
        let mut writer = BufWriter::new(file);
        self.write_to(&mut writer)?;
        writer.flush().map_err(|e| DcplError::io(path, e))
    }
}

impl<'a> IntoIterator for &'a EventLog {
    type Item = &'a Event;
    type IntoIter = std::slice::Iter<'a, Event>;

    fn into_iter(self) -> Self::IntoIter {
        self.events.iter()
    }
}

/// Reads a JSON-Lines event log. When `n_users` is given, user and target
/// indices are range checked.
pub fn load_events(path: impl AsRef<Path>, n_users: Option<usize>) -> Result<EventLog> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| DcplError::io(path, e))?;
    EventLog::from_reader(BufReader::new(file), path, n_users)
}

/// Directed follower graph with `G[i][j] = 1` iff `j` follows `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    n_users: usize,
    adjacency: Vec<bool>,
    /// `followers[i]` = users `j` with `G[i][j] = 1`.
    followers: Vec<Vec<usize>>,
    /// `following[j]` = users `i` with `G[i][j] = 1`.
    following: Vec<Vec<usize>>,
}

impl Network {
    /// Builds a network from `(i, j)` pairs meaning "j follows i".
    /// Duplicate edges collapse; self-loops and out-of-range indices fail.
    pub fn from_edges(n_users: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adjacency = vec![false; n_users * n_users];
        for (i, j) in edges {
            if i >= n_users || j >= n_users {
                return Err(DcplError::invalid(format!(
                    "edge ({i},{j}) out of range (N = {n_users})"
                )));
            }
            if i == j {
                return Err(DcplError::invalid(format!("self-loop at user {i}")));
            }
            adjacency[i * n_users + j] = true;
        }
        Ok(Self::from_adjacency_vec(n_users, adjacency))
    }

    fn from_adjacency_vec(n_users: usize, adjacency: Vec<bool>) -> Self {
        let mut followers = vec![Vec::new(); n_users];
        let mut following = vec![Vec::new(); n_users];
        for i in 0..n_users {
            for j in 0..n_users {
                if adjacency[i * n_users + j] {
                    followers[i].push(j);
                    following[j].push(i);
                }
            }
        }
        Network {
            n_users,
            adjacency,
            followers,
            following,
        }
    }

    pub fn empty(n_users: usize) -> Self {
        Self::from_adjacency_vec(n_users, vec![false; n_users * n_users])
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    /// `G[i][j]`: does `j` follow `i`?
    pub fn edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n_users + j]
    }

    pub fn followers(&self, i: usize) -> &[usize] {
        &self.followers[i]
    }

    pub fn following(&self, j: usize) -> &[usize] {
        &self.following[j]
    }

    pub fn n_edges(&self) -> usize {
        self.followers.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.followers
            .iter()
            .enumerate()
            .flat_map(|(i, fs)| fs.iter().map(move |&j| (i, j)))
    }

    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_users, self.n_users, |i, j| {
            if self.edge(i, j) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// `G v`: entry `i` sums `v` over `i`'s followers.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n_users, |i, _| self.followers[i].iter().map(|&j| v[j]).sum())
    }

    /// `Gᵀ v`: entry `i` sums `v` over the users `i` follows.
    pub fn apply_transpose(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n_users, |i, _| self.following[i].iter().map(|&j| v[j]).sum())
    }

    /// `GᵀG v`, the bilinear form used by the exposure-correlation reward.
    pub fn gram_apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.apply_transpose(&self.apply(v))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(["src", "dst"])?;
        for (i, j) in self.edges() {
            writer.write_record([i.to_string(), j.to_string()])?;
        }
        writer.flush().map_err(|e| DcplError::io(path, e))
    }
}

#[derive(Debug, Deserialize)]
struct EdgeRow {
    src: usize,
    dst: usize,
}

/// Reads an edge-list CSV with header `src,dst`; row `(i, j)` means `j` follows `i`.
/// Without an explicit `n_users` the largest index plus one is used.
pub fn load_network(path: impl AsRef<Path>, n_users: Option<usize>) -> Result<Network> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "src" || &headers[1] != "dst" {
        return Err(DcplError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "expected header \"src,dst\"".into(),
        });
    }
    let mut edges = Vec::new();
    for (idx, row) in reader.deserialize::<EdgeRow>().enumerate() {
        let row = row.map_err(|e| DcplError::Parse {
            path: path.to_path_buf(),
            line: idx + 2,
            message: e.to_string(),
        })?;
        if row.src == row.dst {
            return Err(DcplError::Parse {
                path: path.to_path_buf(),
                line: idx + 2,
                message: format!("self-loop at user {}", row.src),
            });
        }
        edges.push((row.src, row.dst));
    }
    let n = match n_users {
        Some(n) => n,
        None => edges.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0),
    };
    Network::from_edges(n, edges)
}

/// Reads an `external_id,index` sidecar mapping external account ids to dense indices.
pub fn load_id_map(path: impl AsRef<Path>) -> Result<HashMap<String, usize>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)?;
    let mut map = HashMap::new();
    for record in reader.records() {
        let record = record?;
        let ext = record.get(0).unwrap_or_default().to_string();
        let idx: usize = record
            .get(1)
            .unwrap_or_default()
            .trim()
            .parse()
            .map_err(|_| DcplError::invalid(format!("bad index for id {ext}")))?;
        map.insert(ext, idx);
    }
    let mut seen: Vec<usize> = map.values().copied().collect();
    seen.sort_unstable();
    if seen.iter().enumerate().any(|(pos, &idx)| pos != idx) {
        return Err(DcplError::invalid("id map indices must be dense 0..N"));
    }
    Ok(map)
}

/// Equal-length stages covering `[start, start + n_stages * dt)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StagePartition {
    pub start: f64,
    pub dt: f64,
    pub n_stages: usize,
}

impl StagePartition {
    pub fn new(start: f64, horizon: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(DcplError::invalid(format!("stage length must be positive, got {dt}")));
        }
        if !(horizon > start) {
            return Err(DcplError::invalid(format!(
                "empty window [{start}, {horizon})"
            )));
        }
        let ratio = (horizon - start) / dt;
        let k = ratio.round();
        if (ratio - k).abs() > 1e-9 * ratio.max(1.0) {
            return Err(DcplError::invalid(format!(
                "window [{start}, {horizon}) is not a multiple of dt = {dt}"
            )));
        }
        Ok(StagePartition {
            start,
            dt,
            n_stages: k as usize,
        })
    }

    pub fn end(&self) -> f64 {
        self.boundary(self.n_stages)
    }

    /// Start of stage `s` (0-based); `boundary(n_stages)` is the window end.
    pub fn boundary(&self, s: usize) -> f64 {
        self.start + s as f64 * self.dt
    }

    pub fn boundaries(&self) -> Vec<f64> {
        (0..=self.n_stages).map(|s| self.boundary(s)).collect()
    }

    /// `[start, end)` of stage `s`.
    pub fn stage_window(&self, s: usize) -> (f64, f64) {
        (self.boundary(s), self.boundary(s + 1))
    }

    /// Index of the stage containing `t`, if inside the window.
    pub fn stage_of(&self, t: f64) -> Option<usize> {
        if t < self.start || t >= self.end() {
            return None;
        }
        Some((((t - self.start) / self.dt).floor() as usize).min(self.n_stages - 1))
    }
}

/// Column layout of the per-user state.
pub mod col {
    pub const TRUE_TWEET: usize = 0;
    pub const FAKE_TWEET: usize = 1;
    pub const TRUE_RETWEET: usize = 2;
    pub const FAKE_RETWEET: usize = 3;
    pub const LIKES: usize = 4;
    pub const WIDTH: usize = 5;
}

/// N×5 activity counts `(n(T,tweet), n(F,tweet), n(T,retweet), n(F,retweet), likes received)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub counts: DMatrix<f64>,
}

impl NetworkState {
    pub fn zeros(n_users: usize) -> Self {
        NetworkState {
            counts: DMatrix::zeros(n_users, col::WIDTH),
        }
    }

    pub fn n_users(&self) -> usize {
        self.counts.nrows()
    }

    pub fn column(&self, c: usize) -> DVector<f64> {
        self.counts.column(c).into_owned()
    }

    /// Flattened user-major: user 0's five entries first.
    pub fn flatten(&self) -> DVector<f64> {
        let n = self.n_users();
        DVector::from_fn(n * col::WIDTH, |idx, _| self.counts[(idx / col::WIDTH, idx % col::WIDTH)])
    }

    /// Counts of events in `[t0, t1)`.
    pub fn from_window(log: &EventLog, n_users: usize, t0: f64, t1: f64) -> Self {
        let mut counts = DMatrix::zeros(n_users, col::WIDTH);
        for e in log.window(t0, t1) {
            match (e.kind, e.label) {
                (Kind::Tweet, Some(Label::True)) => counts[(e.user, col::TRUE_TWEET)] += 1.0,
                (Kind::Tweet, Some(Label::Fake)) => counts[(e.user, col::FAKE_TWEET)] += 1.0,
                (Kind::Retweet, Some(Label::True)) => counts[(e.user, col::TRUE_RETWEET)] += 1.0,
                (Kind::Retweet, Some(Label::Fake)) => counts[(e.user, col::FAKE_RETWEET)] += 1.0,
                (Kind::Like, _) => {
                    if let Some(target) = e.target {
                        counts[(target, col::LIKES)] += 1.0;
                    }
                }
                _ => {}
            }
        }
        NetworkState { counts }
    }
}

/// State observed at the start of stage `stage` (0-based): counts from the
/// preceding `dt`. For stage 0 that interval lies before the window and is
/// usually covered by the previous window's events.
pub fn compute_state(
    log: &EventLog,
    part: &StagePartition,
    n_users: usize,
    stage: usize,
) -> Result<NetworkState> {
    if stage > part.n_stages {
        return Err(DcplError::invalid(format!(
            "stage {stage} out of range 0..={}",
            part.n_stages
        )));
    }
    let t1 = part.boundary(stage);
    let t0 = t1 - part.dt;
    Ok(NetworkState::from_window(log, n_users, t0, t1))
}

/// Per-user exposure `Gᵀ n`: entry `i` counts posts by users `i` follows.
pub fn exposure_counts(net: &Network, n: &DVector<f64>) -> Result<DVector<f64>> {
    if n.len() != net.n_users() {
        return Err(DcplError::Dimension {
            expected: net.n_users(),
            got: n.len(),
        });
    }
    Ok(net.apply_transpose(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse(text: &str, n: Option<usize>) -> Result<EventLog> {
        EventLog::from_reader(Cursor::new(text), Path::new("mem"), n)
    }

    #[test]
    fn load_sorts_by_time() {
        let log = parse(
            "{\"t\":0.5,\"user\":0,\"kind\":\"tweet\",\"label\":\"T\"}\n{\"t\":0.2,\"user\":1,\"kind\":\"like\",\"target\":0}\n",
            Some(2),
        )
        .unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(log.events()[0].t, 0.2);
        assert_eq!(log.events()[1].t, 0.5);
        assert_eq!(log.events()[0].kind, Kind::Like);
    }

    #[test]
    fn empty_file_is_empty_log() {
        assert!(parse("", None).unwrap().is_empty());
    }

    #[test]
    fn retweet_without_target_reports_line() {
        let err = parse(
            "{\"t\":0.1,\"user\":0,\"kind\":\"tweet\",\"label\":\"F\"}\n{\"t\":1.0,\"user\":0,\"kind\":\"retweet\",\"label\":\"F\"}\n",
            None,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("retweet requires target"), "{msg}");
        assert!(msg.contains(":2:"), "{msg}");
    }

    #[test]
    fn out_of_range_user_rejected() {
        let err = parse("{\"t\":0.1,\"user\":5,\"kind\":\"tweet\",\"label\":\"F\"}\n", Some(3)).unwrap_err();
        assert!(err.to_string().contains("out of range"));
    }

    #[test]
    fn malformed_line_rejected() {
        let err = parse("{\"t\":0.1,\"user\":0,\"kind\":\"tweet\",\"label\":\"T\"}\nnot json\n", None)
            .unwrap_err();
        assert!(matches!(err, DcplError::Parse { line: 2, .. }));
    }

    #[test]
    fn like_with_label_rejected() {
        let err = parse("{\"t\":0.1,\"user\":0,\"kind\":\"like\",\"label\":\"T\",\"target\":1}\n", None)
            .unwrap_err();
        assert!(err.to_string().contains("label"));
    }

    #[test]
    fn network_rows_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        std::fs::write(&path, "src,dst\n0,1\n0,2\n0,1\n").unwrap();
        let net = load_network(&path, Some(3)).unwrap();
        assert!(!net.edge(0, 0));
        assert!(net.edge(0, 1));
        assert!(net.edge(0, 2));
        assert_eq!(net.n_edges(), 2);
    }

    #[test]
    fn network_self_loop_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        std::fs::write(&path, "src,dst\n0,1\n2,2\n").unwrap();
        let err = load_network(&path, Some(3)).unwrap_err();
        assert!(err.to_string().contains("self-loop"));
    }

    #[test]
    fn network_index_out_of_declared_range() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        std::fs::write(&path, "src,dst\n0,3\n").unwrap();
        assert!(load_network(&path, Some(3)).is_err());
    }

    #[test]
    fn partitions() {
        let p = StagePartition::new(0.0, 40.0, 1.0).unwrap();
        assert_eq!(p.n_stages, 40);
        assert_eq!(p.boundaries(), (0..=40).map(f64::from).collect::<Vec<_>>());
        let std = StagePartition::new(10.0, 20.0, 1.0).unwrap();
        assert_eq!(std.n_stages, 10);
        assert!(StagePartition::new(0.0, 10.0, 3.0).is_err());
        assert!(StagePartition::new(0.0, 10.0, 0.0).is_err());
    }

    #[test]
    fn state_counts_previous_stage() {
        let part = StagePartition::new(0.0, 4.0, 1.0).unwrap();
        let log = EventLog::new(vec![
            Event::tweet(1.5, 0, Label::True),
            Event::like(1.7, 3, 0),
            Event::tweet(2.5, 1, Label::Fake),
        ]);
        // stage 2 sees [1, 2)
        let s = compute_state(&log, &part, 4, 2).unwrap();
        assert_eq!(s.counts.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(s.counts[(3, col::LIKES)], 0.0);
        assert_eq!(s.counts.row(1).sum(), 0.0);
        let empty = compute_state(&log, &part, 4, 1).unwrap();
        assert_eq!(empty.counts.sum(), 0.0);
        assert!(compute_state(&log, &part, 4, 5).is_err());
    }

    #[test]
    fn first_stage_uses_preceding_interval() {
        let part = StagePartition::new(10.0, 20.0, 1.0).unwrap();
        let log = EventLog::new(vec![Event::tweet(9.5, 2, Label::Fake)]);
        let s = compute_state(&log, &part, 3, 0).unwrap();
        assert_eq!(s.counts[(2, col::FAKE_TWEET)], 1.0);
    }

    #[test]
    fn exposure_small() {
        let net = Network::from_edges(2, [(0, 1)]).unwrap();
        let e = exposure_counts(&net, &DVector::from_vec(vec![3.0, 0.0])).unwrap();
        assert_eq!(e.as_slice(), &[0.0, 3.0]);
        let z = exposure_counts(&net, &DVector::zeros(2)).unwrap();
        assert_eq!(z.sum(), 0.0);
        assert!(exposure_counts(&net, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn exposure_matches_double_loop() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = 3;
            let mut edges = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if i != j && rng.gen_bool(0.5) {
                        edges.push((i, j));
                    }
                }
            }
            let net = Network::from_edges(n, edges).unwrap();
            let v = DVector::from_fn(n, |_, _| rng.gen_range(0..5) as f64);
            let got = exposure_counts(&net, &v).unwrap();
            for i in 0..n {
                let mut expect = 0.0;
                for j in 0..n {
                    if net.edge(j, i) {
                        expect += v[j];
                    }
                }
                assert_eq!(got[i], expect);
            }
        }
    }

    #[test]
    fn gram_apply_matches_dense() {
        let net = Network::from_edges(4, [(0, 1), (0, 2), (2, 1), (3, 0), (1, 3)]).unwrap();
        let g = net.adjacency_matrix();
        let v = DVector::from_vec(vec![1.0, 2.0, -1.0, 0.5]);
        let dense = g.transpose() * &g * &v;
        assert!((dense - net.gram_apply(&v)).norm() < 1e-12);
    }
}
