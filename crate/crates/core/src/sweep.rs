//! Parameter sweeps over `(s, t)` grids and least-squares scaling fits.
//!
//! Plan files are `key = value` lines (`#` starts a comment):
//!
//! ```text
//! grid = 1,0.5; 1,1; 2,2     # semicolon-separated s,t pairs
//! n = 1:300                  # inclusive range, optional step (1:300:10), or a list (5,10,20)
//! jobs = 4
//! out = entropy.csv
//! ```

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::schmidt::{bounds, entropy_at, BoundsReport, MAX_HALF_LENGTH};

pub const CSV_HEADER: [&str; 7] = ["s", "t", "n", "entropy_nats", "mstar", "logN", "status"];

/// The smallest grid showing every phase: `s` in {1, 2}, `t` in {0.5, 1, 2}.
pub const DEFAULT_GRID: [(u32, f64); 6] = [(1, 0.5), (1, 1.0), (1, 2.0), (2, 0.5), (2, 1.0), (2, 2.0)];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub grid: Vec<(u32, f64)>,
    pub n_samples: Vec<usize>,
    pub out: Option<PathBuf>,
    pub jobs: usize,
}

impl Default for SweepPlan {
    fn default() -> Self {
        SweepPlan {
            grid: DEFAULT_GRID.to_vec(),
            n_samples: (1..=300).collect(),
            out: None,
            jobs: 1,
        }
    }
}

fn plan_err(line: usize, msg: impl fmt::Display) -> Error {
    Error::Plan(format!("line {line}: {msg}"))
}

fn parse_grid(value: &str, line: usize) -> Result<Vec<(u32, f64)>> {
    value
        .split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|pair| {
            let (s, t) = pair
                .split_once(',')
                .ok_or_else(|| plan_err(line, format!("grid entry {pair:?} is not `s,t`")))?;
            let s = s
                .trim()
                .parse::<u32>()
                .map_err(|_| plan_err(line, format!("bad s in {pair:?}")))?;
            let t = t
                .trim()
                .parse::<f64>()
                .map_err(|_| plan_err(line, format!("bad t in {pair:?}")))?;
            Ok((s, t))
        })
        .collect()
}

fn parse_n(value: &str, line: usize) -> Result<Vec<usize>> {
    let num = |x: &str| {
        x.trim()
            .parse::<usize>()
            .map_err(|_| plan_err(line, format!("{x:?} is not a nonnegative integer")))
    };
    if value.contains(':') {
        let parts: Vec<&str> = value.split(':').collect();
        let (lo, hi, step) = match parts.as_slice() {
            [lo, hi] => (num(lo)?, num(hi)?, 1),
            [lo, hi, step] => (num(lo)?, num(hi)?, num(step)?),
            _ => return Err(plan_err(line, "range must be lo:hi or lo:hi:step")),
        };
        if step == 0 || lo > hi {
            return Err(plan_err(line, format!("empty range {value:?}")));
        }
        Ok((lo..=hi).step_by(step).collect())
    } else {
        value
            .split(',')
            .filter(|x| !x.trim().is_empty())
            .map(num)
            .collect()
    }
}

impl SweepPlan {
    pub fn parse(text: &str) -> Result<Self> {
        let mut plan = SweepPlan::default();
        let (mut saw_grid, mut saw_n) = (false, false);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| plan_err(line, "expected key = value"))?;
            let value = value.trim();
            match key.trim() {
                "grid" => {
                    plan.grid = parse_grid(value, line)?;
                    saw_grid = true;
                }
                "n" => {
                    plan.n_samples = parse_n(value, line)?;
                    saw_n = true;
                }
                "jobs" => {
                    plan.jobs = value
                        .parse()
                        .map_err(|_| plan_err(line, format!("jobs = {value:?} is not an integer")))?;
                }
                "out" => plan.out = Some(PathBuf::from(value)),
                other => return Err(plan_err(line, format!("unknown key {other:?}"))),
            }
        }
        if !saw_grid || !saw_n {
            return Err(Error::Plan("plan needs both `grid` and `n`".into()));
        }
        plan.validate()?;
        Ok(plan)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Plan("grid is empty".into()));
        }
        if let Some((s, t)) = self
            .grid
            .iter()
            .find(|(s, t)| *s == 0 || !(t.is_finite() && *t > 0.0))
        {
            return Err(Error::Plan(format!(
                "grid point ({s}, {t}) needs s >= 1 and t > 0"
            )));
        }
        if self.n_samples.is_empty() {
            return Err(Error::Plan("no n values".into()));
        }
        if let Some(n) = self.n_samples.iter().find(|&&n| n == 0 || n > MAX_HALF_LENGTH) {
            return Err(Error::Plan(format!("n = {n} outside [1, {MAX_HALF_LENGTH}]")));
        }
        if self.jobs == 0 {
            return Err(Error::Plan("jobs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub s: u32,
    pub t: f64,
    pub n: usize,
    /// `None` on error rows.
    pub entropy: Option<f64>,
    pub mstar: Option<usize>,
    pub log_norm: Option<f64>,
    /// `ok`, or `error: <reason>`.
    pub status: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn error(s: u32, t: f64, n: usize, reason: &str) -> Self {
        SweepRow {
            s,
            t,
            n,
            entropy: None,
            mstar: None,
            log_norm: None,
            status: format!("error: {reason}"),
        }
    }

    fn fields(&self) -> [String; 7] {
        let opt = |v: Option<f64>| v.map(crate::fmt_f64).unwrap_or_default();
        [
            self.s.to_string(),
            crate::fmt_f64(self.t),
            self.n.to_string(),
            opt(self.entropy),
            self.mstar.map(|m| m.to_string()).unwrap_or_default(),
            opt(self.log_norm),
            self.status.clone(),
        ]
    }
}

/// Rows plus the analytic bounds of each grid point (plan order).
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub bounds: Vec<Option<BoundsReport>>,
}

fn run_point(s: u32, t: f64, ns: &[usize]) -> (Vec<SweepRow>, Option<BoundsReport>) {
    let rows = match entropy_at(ns, s, t) {
        Ok(points) => points
            .into_iter()
            .map(|p| {
                if p.entropy.is_finite() && p.log_norm.is_finite() {
                    SweepRow {
                        s,
                        t,
                        n: p.n,
                        entropy: Some(p.entropy),
                        mstar: Some(p.mstar),
                        log_norm: Some(p.log_norm),
                        status: "ok".into(),
                    }
                } else {
                    SweepRow::error(s, t, p.n, "non-finite result")
                }
            })
            .collect(),
        Err(e) => ns
            .iter()
            .map(|&n| SweepRow::error(s, t, n, &e.to_string()))
            .collect(),
    };
    let max_n = ns.iter().copied().max().unwrap_or(1);
    (rows, bounds(max_n, s, t).ok())
}

/// Computes every grid point (in parallel with `plan.jobs` workers) and
/// returns rows in plan order. A failing grid point yields error rows and
/// the sweep continues.
pub fn run_sweep(plan: &SweepPlan) -> Result<SweepResult> {
    if plan.grid.is_empty() || plan.n_samples.is_empty() {
        return Err(Error::Plan("nothing to compute".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs.max(1))
        .build()
        .map_err(|e| Error::Plan(format!("could not start workers: {e}")))?;
    let per_point: Vec<(Vec<SweepRow>, Option<BoundsReport>)> = pool.install(|| {
        plan.grid
            .par_iter()
            .map(|&(s, t)| run_point(s, t, &plan.n_samples))
            .collect()
    });
    let mut rows = Vec::new();
    let mut all_bounds = Vec::new();
    for (r, b) in per_point {
        rows.extend(r);
        all_bounds.push(b);
    }
    Ok(SweepResult {
        rows,
        bounds: all_bounds,
    })
}

pub fn write_rows<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the CSV to a temporary file next to `path` and renames it into place.
pub fn write_csv_atomic(rows: &[SweepRow], path: &Path) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    write_rows(rows, &mut tmp)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(Error::Plan(format!(
            "{} does not have the sweep header {}",
            path.display(),
            CSV_HEADER.join(",")
        )));
    }
    let bad = |what: &str, v: &str| Error::Plan(format!("bad {what} value {v:?} in {}", path.display()));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let get = |i: usize| rec.get(i).unwrap_or("");
        let opt_f = |i: usize, what: &str| -> Result<Option<f64>> {
            match get(i) {
                "" => Ok(None),
                v => v.parse().map(Some).map_err(|_| bad(what, v)),
            }
        };
        rows.push(SweepRow {
            s: get(0).parse().map_err(|_| bad("s", get(0)))?,
            t: get(1).parse().map_err(|_| bad("t", get(1)))?,
            n: get(2).parse().map_err(|_| bad("n", get(2)))?,
            entropy: opt_f(3, "entropy_nats")?,
            mstar: match get(4) {
                "" => None,
                v => Some(v.parse().map_err(|_| bad("mstar", v))?),
            },
            log_norm: opt_f(5, "logN")?,
            status: get(6).to_string(),
        });
    }
    Ok(rows)
}

/// Successful rows at `(s, t)` with `lo <= n <= hi`.
pub fn select(rows: &[SweepRow], s: u32, t: f64, lo: usize, hi: usize) -> Vec<SweepRow> {
    rows.iter()
        .filter(|r| r.is_ok() && r.s == s && r.t == t && r.n >= lo && r.n <= hi)
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    Linear,
    Sqrt,
    Log,
    Constant,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::Linear, Model::Sqrt, Model::Log, Model::Constant];

    fn feature(self, n: f64) -> f64 {
        match self {
            Model::Linear => n,
            Model::Sqrt => n.sqrt(),
            Model::Log => n.ln(),
            Model::Constant => 0.0,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Linear => "linear",
            Model::Sqrt => "sqrt",
            Model::Log => "log",
            Model::Constant => "constant",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Model::Linear),
            "sqrt" => Ok(Model::Sqrt),
            "log" => Ok(Model::Log),
            "constant" => Ok(Model::Constant),
            other => Err(Error::Domain(format!(
                "unknown model {other:?} (expected linear, sqrt, log or constant)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: Model,
    /// Slope on the model feature (`n`, `sqrt n`, `ln n`); the mean for `Constant`.
    pub coefficient: f64,
    /// Zero for `Constant`.
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    pub n_range: (usize, usize),
    pub points: usize,
}

pub const MIN_FIT_ROWS: usize = 10;

/// Least squares `S ~ a f(n) + b` (or `S ~ b` for `Constant`) over the successful rows.
pub fn fit_scaling(rows: &[SweepRow], model: Model) -> Result<FitResult> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.entropy.filter(|_| r.is_ok()).map(|e| (r.n as f64, e)))
        .collect();
    if pts.len() < MIN_FIT_ROWS {
        return Err(Error::DegenerateFit(format!(
            "{} usable rows, need at least {MIN_FIT_ROWS}",
            pts.len()
        )));
    }
    let n_lo = rows.iter().filter(|r| r.is_ok()).map(|r| r.n).min().unwrap_or(0);
    let n_hi = rows.iter().filter(|r| r.is_ok()).map(|r| r.n).max().unwrap_or(0);
    if n_lo == n_hi {
        return Err(Error::DegenerateFit(format!("every row has n = {n_lo}")));
    }
    let count = pts.len() as f64;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / count;
    let (coefficient, intercept) = if model == Model::Constant {
        (mean_y, 0.0)
    } else {
        let xs: Vec<f64> = pts.iter().map(|p| model.feature(p.0)).collect();
        let mean_x = xs.iter().sum::<f64>() / count;
        let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
        let sxy: f64 = xs
            .iter()
            .zip(&pts)
            .map(|(x, p)| (x - mean_x) * (p.1 - mean_y))
            .sum();
        let a = sxy / sxx;
        (a, mean_y - a * mean_x)
    };
    let predict = |n: f64| match model {
        Model::Constant => coefficient,
        _ => coefficient * model.feature(n) + intercept,
    };
    let sse: f64 = pts.iter().map(|&(n, y)| (y - predict(n)).powi(2)).sum();
    Ok(FitResult {
        model,
        coefficient,
        intercept,
        residual: (sse / count).sqrt(),
        n_range: (n_lo, n_hi),
        points: pts.len(),
    })
}

/// All four fits, best (smallest residual) first.
pub fn rank_models(rows: &[SweepRow]) -> Result<Vec<FitResult>> {
    let mut fits = Model::ALL
        .iter()
        .map(|&m| fit_scaling(rows, m))
        .collect::<Result<Vec<_>>>()?;
    fits.sort_by(|a, b| a.residual.total_cmp(&b.residual));
    Ok(fits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64) -> Vec<SweepRow> {
        (1..=40)
            .map(|n| SweepRow {
                s: 1,
                t: 1.0,
                n,
                entropy: Some(f(n as f64)),
                mstar: Some(0),
                log_norm: Some(0.0),
                status: "ok".into(),
            })
            .collect()
    }

    #[test]
    fn parses_plan_files() {
        let plan =
            SweepPlan::parse("# demo\ngrid = 1,1; 2,0.5\nn = 1:10:3\njobs = 2\nout = x.csv\n").unwrap();
        assert_eq!(plan.grid, vec![(1, 1.0), (2, 0.5)]);
        assert_eq!(plan.n_samples, vec![1, 4, 7, 10]);
        assert_eq!(plan.jobs, 2);
        assert_eq!(plan.out, Some(PathBuf::from("x.csv")));
        assert_eq!(
            SweepPlan::parse("grid=1,1\nn=5,2,9").unwrap().n_samples,
            vec![5, 2, 9]
        );
        for bad in [
            "grid = 1,1",
            "grid = 1,1\nn = 0:3",
            "grid = 0,1\nn = 1",
            "grid = 1,-2\nn = 1",
            "grid = 1\nn = 1",
            "grid = 1,1\nn = 5:2",
            "grid = 1,1\nn = 1\nspeed = 3",
            "grid = 1,1\nn = 1\njobs = 0",
        ] {
            assert!(matches!(SweepPlan::parse(bad), Err(Error::Plan(_))), "{bad:?}");
        }
    }

    #[test]
    fn single_point_gives_log_two() {
        let plan = SweepPlan::parse("grid = 1,1\nn = 1").unwrap();
        let res = run_sweep(&plan).unwrap();
        assert_eq!(res.rows.len(), 1);
        assert!((res.rows[0].entropy.unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rows_follow_plan_order_for_any_worker_count() {
        let mut plan = SweepPlan::parse("grid = 2,2; 1,0.5; 2,1\nn = 3, 1, 50").unwrap();
        let one = run_sweep(&plan).unwrap().rows;
        plan.jobs = 3;
        let three = run_sweep(&plan).unwrap().rows;
        assert_eq!(one, three);
        let order: Vec<(u32, f64, usize)> = one.iter().map(|r| (r.s, r.t, r.n)).collect();
        assert_eq!(order[..3], [(2, 2.0, 3), (2, 2.0, 1), (2, 2.0, 50)]);
        assert_eq!(order[3], (1, 0.5, 3));
        assert!(one
            .iter()
            .all(|r| r.entropy.unwrap() >= 0.0 && r.mstar.unwrap() <= r.n));
    }

    #[test]
    fn bad_points_become_error_rows() {
        let plan = SweepPlan {
            grid: vec![(1, 1.0), (1, -1.0)],
            n_samples: vec![1, 2],
            out: None,
            jobs: 1,
        };
        let rows = run_sweep(&plan).unwrap().rows;
        assert_eq!(rows.len(), 4);
        assert!(rows[0].is_ok() && rows[1].is_ok());
        assert!(rows[2].status.starts_with("error: ") && rows[2].entropy.is_none());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let plan = SweepPlan::parse("grid = 2,0.7; 1,1.3\nn = 1:25").unwrap();
        let mut rows = run_sweep(&plan).unwrap().rows;
        rows.push(SweepRow::error(3, 0.1, 4, "boom, with comma"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_csv_atomic(&rows, &path).unwrap();
        assert_eq!(read_csv(&path).unwrap(), rows);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("s,t,n,entropy_nats,mstar,logN,status\n"));
        // rewriting replaces the file wholesale
        write_csv_atomic(&rows[..2], &path).unwrap();
        assert_eq!(read_csv(&path).unwrap().len(), 2);
    }

    #[test]
    fn exact_linear_fit() {
        let fit = fit_scaling(&synthetic(|n| 3.0 * n), Model::Linear).unwrap();
        assert!((fit.coefficient - 3.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert_eq!(fit.n_range, (1, 40));
        let best = rank_models(&synthetic(|n| 0.7 * n.sqrt() + 0.1)).unwrap();
        assert_eq!(best[0].model, Model::Sqrt);
        let c = fit_scaling(&synthetic(|_| 2.5), Model::Constant).unwrap();
        assert!((c.coefficient - 2.5).abs() < 1e-12 && c.residual < 1e-12);
    }

    #[test]
    fn degenerate_fits_are_rejected() {
        let rows = synthetic(|n| n);
        assert!(matches!(
            fit_scaling(&rows[..9], Model::Linear),
            Err(Error::DegenerateFit(_))
        ));
        let same_n: Vec<SweepRow> = rows.iter().map(|r| SweepRow { n: 7, ..r.clone() }).collect();
        assert!(matches!(
            fit_scaling(&same_n, Model::Log),
            Err(Error::DegenerateFit(_))
        ));
        assert!("cubic".parse::<Model>().is_err());
        assert_eq!("sqrt".parse::<Model>().unwrap(), Model::Sqrt);
    }

    #[test]
    fn entropy_grows_with_t_at_two_colors() {
        let plan = SweepPlan {
            grid: [0.5, 0.8, 1.0, 1.5, 2.0].iter().map(|&t| (2, t)).collect(),
            n_samples: vec![300],
            out: None,
            jobs: 2,
        };
        let rows = run_sweep(&plan).unwrap().rows;
        assert!(rows
            .windows(2)
            .all(|w| w[1].entropy.unwrap() >= w[0].entropy.unwrap()));
    }
}
