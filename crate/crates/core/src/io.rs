//! File formats.
//!
//! All data files are CSV preceded by a block of `# key = value` comment
//! lines describing how they were produced. Floats are written in Rust's
//! shortest round-trip form, so reading a file back reproduces the values
//! bit for bit. Reports come in pairs: `key = value` text and a JSON object
//! with the same keys.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use tempfile::NamedTempFile;

use crate::correlation::CorrelationResult;
use crate::dynamics::{JumpTrace, KickOutcome, SpinBranch};
use crate::error::{Error, Result};
use crate::noise::Sign;
use crate::stats::IntervalHistogram;
use crate::sweep::SweepTable;

/// Path that means standard input or output.
pub const STDIO_PATH: &str = "-";

/// Shortest round-trip text for `v`, in exponent form when very small or large.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-3..1e7).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

/// Ordered `# key = value` header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    entries: Vec<(String, String)>,
}

impl Header {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn extend(&mut self, other: &Header) -> &mut Self {
        self.entries.extend(other.entries.iter().cloned());
        self
    }

    /// Last value recorded under `key`.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out
    }

    fn parse_line(line: &str) -> Option<(String, String)> {
        let body = line.strip_prefix('#')?.trim();
        let (k, v) = body.split_once(" = ")?;
        Some((k.trim().to_string(), v.trim().to_string()))
    }
}

/// Key-value report rendered as text and JSON.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, Value)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Into<Value>) -> &mut Self {
        self.entries.push((key.into(), value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let shown = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            let _ = writeln!(out, "{k} = {shown}");
        }
        out
    }

    pub fn to_json(&self) -> String {
        let map: Map<String, Value> = self.entries.iter().cloned().collect();
        let mut s = serde_json::to_string_pretty(&Value::Object(map)).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Files to be written together: everything is staged in temporary files
/// next to its destination and only renamed into place once all of them
/// were written successfully.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(PathBuf, Vec<u8>)>,
    stdout: Vec<u8>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Queues `contents` for `path`; `-` means standard output.
    pub fn add(&mut self, path: &Path, contents: impl Into<Vec<u8>>) {
        if path == Path::new(STDIO_PATH) {
            self.stdout.extend(contents.into());
        } else {
            self.files.push((path.to_path_buf(), contents.into()));
        }
    }

    /// Queues a report as text at `path` and JSON at `path` + `.json`.
    pub fn add_report(&mut self, path: &Path, report: &Report) {
        self.add(path, report.to_text());
        if path != Path::new(STDIO_PATH) {
            let mut json = path.as_os_str().to_owned();
            json.push(".json");
            self.add(Path::new(&json), report.to_json());
        }
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(p, _)| p.as_path())
    }

    pub fn commit(self) -> Result<()> {
        let mut staged = Vec::with_capacity(self.files.len());
        for (path, bytes) in &self.files {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let mut tmp = NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
            tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
            tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
            staged.push((tmp, path));
        }
        for (tmp, path) in staged {
            tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
        }
        if !self.stdout.is_empty() {
            let mut out = std::io::stdout().lock();
            out.write_all(&self.stdout)
                .and_then(|_| out.flush())
                .map_err(|e| Error::io(STDIO_PATH, e))?;
        }
        Ok(())
    }
}

/// Header fields every jumps file carries so it can be analysed alone.
pub fn trace_header(trace: &JumpTrace) -> Header {
    let mut h = Header::new();
    h.push("seed", trace.seed)
        .push("initial_branch", trace.initial_branch)
        .push("kick_count", trace.kick_count)
        .push("total_duration", trace.total_duration)
        .push("jump_count", trace.jump_count());
    h
}

pub fn jumps_csv(header: &Header, trace: &JumpTrace) -> String {
    let mut out = header.render();
    out.push_str("jump_index,jump_time\n");
    for (i, t) in trace.jump_times.iter().enumerate() {
        let _ = writeln!(out, "{i},{t}");
    }
    out
}

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn header_value<T: std::str::FromStr>(header: &Header, key: &str, path: &Path) -> Result<T> {
    let raw = header
        .get(key)
        .ok_or_else(|| parse_err(path, 0, format!("header is missing `{key}`")))?;
    raw.parse()
        .map_err(|_| parse_err(path, 0, format!("header `{key}` has invalid value `{raw}`")))
}

/// Reads a jumps CSV written by [`jumps_csv`].
pub fn read_jumps<R: Read>(reader: R, path: &Path) -> Result<(Header, JumpTrace)> {
    let mut header = Header::new();
    let mut jumps = Vec::new();
    let mut seen_columns = false;
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some((k, v)) = Header::parse_line(line) {
                header.push(k, v);
            }
            continue;
        }
        if !seen_columns {
            if line.replace(' ', "") != "jump_index,jump_time" {
                return Err(parse_err(path, lineno, format!("unexpected column header `{line}`")));
            }
            seen_columns = true;
            continue;
        }
        let (_, time) = line
            .split_once(',')
            .ok_or_else(|| parse_err(path, lineno, "expected `jump_index,jump_time`"))?;
        let t: f64 = time
            .trim()
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad jump time `{time}`")))?;
        if jumps.last().is_some_and(|&prev| t <= prev) {
            return Err(parse_err(path, lineno, "jump times must increase strictly"));
        }
        jumps.push(t);
    }
    if !seen_columns {
        return Err(parse_err(path, 0, "no `jump_index,jump_time` column header"));
    }
    let branch: Sign = header_value::<String>(&header, "initial_branch", path)?
        .parse()
        .map_err(|_| parse_err(path, 0, "header `initial_branch` must be +1 or -1"))?;
    let trace = JumpTrace {
        jump_times: jumps,
        initial_branch: SpinBranch(branch),
        total_duration: header_value(&header, "total_duration", path)?,
        kick_count: header_value(&header, "kick_count", path)?,
        seed: header_value(&header, "seed", path)?,
    };
    if trace
        .jump_times
        .last()
        .is_some_and(|&t| t > trace.total_duration)
    {
        return Err(parse_err(path, 0, "jump after total_duration"));
    }
    Ok((header, trace))
}

/// Opens `path` (or standard input for `-`) and reads a jumps file.
pub fn load_jumps(path: &Path) -> Result<(Header, JumpTrace)> {
    if path == Path::new(STDIO_PATH) {
        read_jumps(std::io::stdin().lock(), path)
    } else {
        let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        read_jumps(f, path)
    }
}

pub fn kicks_csv(header: &Header, kicks: &[KickOutcome]) -> String {
    let mut out = header.render();
    out.push_str("index,time,sign_after\n");
    for (i, k) in kicks.iter().enumerate() {
        let _ = writeln!(out, "{i},{},{}", k.kick.time, k.kick.sign_after);
    }
    out
}

pub fn histogram_csv(header: &Header, hist: &IntervalHistogram) -> String {
    let mut out = header.render();
    out.push_str("bin_center,count,probability\n");
    for ((c, n), p) in hist
        .bin_centers
        .iter()
        .zip(&hist.counts)
        .zip(hist.probabilities())
    {
        let _ = writeln!(out, "{c},{n},{p}");
    }
    out
}

pub fn correlation_csv(header: &Header, result: &CorrelationResult) -> String {
    let mut out = header.render();
    out.push_str("lag,c\n");
    for (l, c) in result.lags.iter().zip(&result.c_values) {
        let _ = writeln!(out, "{l},{c}");
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| x.to_string())
}

pub fn sweep_csv(header: &Header, table: &SweepTable) -> String {
    let mut out = header.render();
    for (i, p) in table.points.iter().enumerate() {
        if let Some(w) = &p.warning {
            let _ = writeln!(out, "# warning.point{i} = {w}");
        }
    }
    out.push_str("delta,tau0,x_m,domega,dtau,mean_tau_jump,std_tau_jump,n_jumps,n_kicks,seed\n");
    for p in &table.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            p.delta,
            p.tau0,
            p.x_m,
            p.domega,
            p.dtau,
            opt(p.mean_tau_jump),
            opt(p.std_tau_jump),
            p.n_jumps,
            p.n_kicks,
            p.seed
        );
    }
    out
}

/// Lines of `text` that are not `#` comments.
pub fn data_section(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .fold(String::new(), |mut acc, l| {
            acc.push_str(l);
            acc.push('\n');
            acc
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_trace() -> JumpTrace {
        JumpTrace {
            jump_times: vec![0.1, 1.0 / 3.0, std::f64::consts::PI * 7.0],
            initial_branch: SpinBranch::AGAINST,
            total_duration: 30.0,
            kick_count: 3000,
            seed: 12345678901234567,
        }
    }

    #[test]
    fn jumps_file_round_trips() {
        let trace = sample_trace();
        let mut h = Header::new();
        h.push("tool", "test").extend(&trace_header(&trace));
        let text = jumps_csv(&h, &trace);
        let (header, back) = read_jumps(text.as_bytes(), Path::new("mem")).unwrap();
        assert_eq!(back, trace);
        assert_eq!(header.get("tool"), Some("test"));
    }

    #[test]
    fn malformed_jump_files() {
        let p = Path::new("mem");
        assert!(read_jumps("# seed = 1\n".as_bytes(), p).is_err());
        let missing = "jump_index,jump_time\n0,1.0\n";
        assert!(matches!(read_jumps(missing.as_bytes(), p), Err(Error::Parse { .. })));
        let trace = sample_trace();
        let good = jumps_csv(&trace_header(&trace), &trace);
        let unordered = good.replace("0,0.1\n", "0,5\n");
        assert!(read_jumps(unordered.as_bytes(), p).is_err());
    }

    #[test]
    fn report_formats() {
        let mut r = Report::new();
        r.push("tau_d", 32.5).push("n_intervals", 10u64).push("note", "ok");
        assert_eq!(r.to_text(), "tau_d = 32.5\nn_intervals = 10\nnote = ok\n");
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["tau_d"], 32.5);
        assert!(r.to_json().find("tau_d").unwrap() < r.to_json().find("note").unwrap());
    }

    #[test]
    fn output_set_writes_everything_or_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let mut set = OutputSet::new();
        set.add(&a, "x\n");
        let mut r = Report::new();
        r.push("k", 1);
        set.add_report(&dir.path().join("r.txt"), &r);
        set.commit().unwrap();
        assert_eq!(fs::read_to_string(&a).unwrap(), "x\n");
        assert!(dir.path().join("r.txt.json").exists());

        // The second destination is a directory, so persisting fails; the
        // first file must not appear either.
        let b = dir.path().join("b.csv");
        let blocker = dir.path().join("blocker");
        fs::create_dir(&blocker).unwrap();
        fs::write(blocker.join("inner"), "").unwrap();
        let mut set = OutputSet::new();
        set.add(&blocker, "y\n");
        set.add(&b, "z\n");
        assert!(set.commit().is_err());
        assert!(!b.exists());
        let leftovers = fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(leftovers, 4);
    }

    #[test]
    fn data_section_strips_comments() {
        assert_eq!(data_section("# a = 1\nx,y\n1,2\n"), "x,y\n1,2\n");
    }
}
