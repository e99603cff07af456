//! Critical-line zero location and the persistent zero cache.
//!
//! Zeros of zhat_n(1/2 + i gamma) are found as sign changes of the real
//! restriction along a scan, then sharpened by bisection.  Located zeros can
//! be persisted to a CSV cache that is safe against concurrent writers
//! (advisory lock file) and reproducible byte for byte (deterministic
//! timestamps).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::num::root::bisect;
use crate::zeta::{critical_line_with_err, JProfile};
use crate::{par, Result};

/// How a zero was certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Sign change of the zeta restriction itself.
    Direct,
    /// Re-verification through the averaged resolvent kernel.
    Phi,
}

impl Route {
    pub fn as_str(&self) -> &'static str {
        match self {
            Route::Direct => "direct",
            Route::Phi => "phi",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Route::Direct),
            "phi" => Ok(Route::Phi),
            other => Err(Error::domain(format!("unknown zero route '{other}'"))),
        }
    }
}

/// A certified critical-line zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroRecord {
    pub n: u8,
    pub gamma: f64,
    /// Sign-change bracket around gamma; its width is at most `tol`.
    pub bracket: (f64, f64),
    pub tol: f64,
    pub route: Route,
}

/// Scans [gamma_min, gamma_max] in steps of `step` and refines every sign
/// change to width `tol`.
///
/// If any scan interval has both endpoint values indistinguishable from
/// zero at the evaluation error, the scan is inconclusive there and an
/// error lists the suspect intervals instead of guessing.
pub fn find_zeros(
    profile: &JProfile,
    gamma_min: f64,
    gamma_max: f64,
    step: f64,
    tol: f64,
) -> Result<Vec<ZeroRecord>> {
    if !(gamma_max > gamma_min) {
        return Err(Error::domain("empty scan range"));
    }
    if !(step > 0.0 && tol > 0.0) {
        return Err(Error::domain("step and tol must be positive"));
    }
    let count = ((gamma_max - gamma_min) / step).ceil() as usize + 1;
    let gammas: Vec<f64> = (0..count)
        .map(|i| (gamma_min + i as f64 * step).min(gamma_max))
        .collect();
    let evals = par::map_indexed(gammas.len(), |i| critical_line_with_err(profile, gammas[i]));
    let mut vals = Vec::with_capacity(evals.len());
    for e in evals {
        vals.push(e?);
    }

    let mut suspects = Vec::new();
    for i in 0..vals.len() - 1 {
        let (v0, e0) = vals[i];
        let (v1, e1) = vals[i + 1];
        if v0.abs().max(v1.abs()) <= 2.0 * e0.max(e1) {
            suspects.push((gammas[i], gammas[i + 1]));
        }
    }
    if !suspects.is_empty() {
        let listed: Vec<String> = suspects
            .iter()
            .map(|(a, b)| format!("[{a}, {b}]"))
            .collect();
        return Err(Error::numeric(format!(
            "inconclusive scan: evaluation error exceeds the value scale on {}",
            listed.join(", ")
        )));
    }

    let f = |g: f64| {
        critical_line_with_err(profile, g)
            .map(|(v, _)| v)
            .unwrap_or(f64::NAN)
    };
    let mut out = Vec::new();
    for i in 0..vals.len() - 1 {
        let (v0, _) = vals[i];
        let (v1, _) = vals[i + 1];
        if v0 == 0.0 {
            out.push(ZeroRecord {
                n: profile.rank(),
                gamma: gammas[i],
                bracket: (gammas[i] - 0.5 * tol, gammas[i] + 0.5 * tol),
                tol,
                route: Route::Direct,
            });
        } else if v0 * v1 < 0.0 {
            let (gamma, bracket) = bisect(f, gammas[i], gammas[i + 1], tol)?;
            out.push(ZeroRecord { n: profile.rank(), gamma, bracket, tol, route: Route::Direct });
        }
    }
    Ok(out)
}

/// Serialized cache row.
#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    n: u8,
    gamma: f64,
    tol: f64,
    route: String,
    timestamp: u64,
}

/// Seconds value stamped into cache rows.
///
/// Honors SOURCE_DATE_EPOCH so rebuilds are byte-identical; without it a
/// fixed sentinel keeps the file deterministic rather than leaking wall
/// time.
fn deterministic_timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}

/// Advisory lock on `<path>.lock`, released on drop.
struct CacheLock {
    lock_path: PathBuf,
}

impl CacheLock {
    fn acquire(path: &Path) -> Result<Self> {
        let lock_path = PathBuf::from(format!("{}.lock", path.display()));
        for _ in 0..40 {
            match std::fs::OpenOptions::new()
                .write(true)
                .create_new(true)
                .open(&lock_path)
            {
                Ok(_) => return Ok(CacheLock { lock_path }),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    std::thread::sleep(std::time::Duration::from_millis(50));
                }
                Err(e) => return Err(Error::Io(e)),
            }
        }
        Err(Error::resource(format!(
            "zero cache lock {} held by another process",
            lock_path.display()
        )))
    }
}

impl Drop for CacheLock {
    fn drop(&mut self) {
        std::fs::remove_file(&self.lock_path).ok();
    }
}

/// Writes the records to `path`, replacing existing contents.
pub fn save_zero_cache(path: &Path, records: &[ZeroRecord]) -> Result<()> {
    let _lock = CacheLock::acquire(path)?;
    write_rows(path, records)
}

fn write_rows(path: &Path, records: &[ZeroRecord]) -> Result<()> {
    let stamp = deterministic_timestamp();
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(CsvRow {
            n: r.n,
            gamma: r.gamma,
            tol: r.tol,
            route: r.route.as_str().to_string(),
            timestamp: stamp,
        })?;
    }
    w.flush().map_err(Error::Io)?;
    Ok(())
}

/// Reads a cache written by [`save_zero_cache`].
///
/// Brackets are not persisted; loaded records carry the tol-wide bracket
/// around gamma.
pub fn load_zero_cache(path: &Path) -> Result<Vec<ZeroRecord>> {
    let _lock = CacheLock::acquire(path)?;
    read_rows(path)
}

fn read_rows(path: &Path) -> Result<Vec<ZeroRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: CsvRow = row?;
        if !(row.tol > 0.0) || !row.gamma.is_finite() {
            return Err(Error::domain(format!(
                "cache row with gamma = {}, tol = {} is invalid",
                row.gamma, row.tol
            )));
        }
        out.push(ZeroRecord {
            n: row.n,
            gamma: row.gamma,
            bracket: (row.gamma - 0.5 * row.tol, row.gamma + 0.5 * row.tol),
            tol: row.tol,
            route: Route::parse(&row.route)?,
        });
    }
    Ok(out)
}

/// Merges `records` into the cache at `path` and returns the merged list.
///
/// Records of the same rank and route within each other's tolerance are
/// deduplicated, keeping the sharper one.  Output is sorted by (n, gamma),
/// so the file contents are a pure function of the record set.
pub fn extend_zero_cache(path: &Path, records: &[ZeroRecord]) -> Result<Vec<ZeroRecord>> {
    let _lock = CacheLock::acquire(path)?;
    let mut merged = if path.exists() { read_rows(path)? } else { Vec::new() };
    for r in records {
        let duplicate = merged.iter_mut().find(|m| {
            m.n == r.n && m.route == r.route && (m.gamma - r.gamma).abs() <= m.tol.max(r.tol)
        });
        match duplicate {
            Some(m) => {
                if r.tol < m.tol {
                    *m = r.clone();
                }
            }
            None => merged.push(r.clone()),
        }
    }
    merged.sort_by(|a, b| {
        a.n.cmp(&b.n)
            .then(a.gamma.partial_cmp(&b.gamma).expect("finite gammas"))
    });
    write_rows(path, &merged)?;
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::ModuliGrid;
    use crate::zeta::DEFAULT_T_MAX;

    fn profile1() -> JProfile {
        JProfile::build(1, &ModuliGrid::rank1(), 1e-13, DEFAULT_T_MAX).unwrap()
    }

    /// First three nontrivial zero ordinates, pinned against a 50-digit
    /// independent evaluation.
    const ORDINATES: [f64; 3] = [
        14.134_725_141_734_694,
        21.022_039_638_771_555,
        25.010_857_580_145_689,
    ];

    #[test]
    fn locates_first_three_rank1_zeros() {
        let p = profile1();
        let zeros = find_zeros(&p, 10.0, 30.0, 0.25, 1e-6).unwrap();
        assert_eq!(zeros.len(), 3);
        for (z, want) in zeros.iter().zip(ORDINATES) {
            assert!((z.gamma - want).abs() < 1e-5, "gamma {} vs {want}", z.gamma);
            assert!(z.bracket.1 - z.bracket.0 <= z.tol);
            assert_eq!(z.route, Route::Direct);
        }
    }

    #[test]
    fn zeros_are_symmetric_in_gamma() {
        let p = profile1();
        let neg = find_zeros(&p, -14.5, -13.5, 0.2, 1e-6).unwrap();
        assert_eq!(neg.len(), 1);
        assert!((neg[0].gamma + ORDINATES[0]).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_scan_parameters() {
        let p = profile1();
        assert!(find_zeros(&p, 3.0, 2.0, 0.1, 1e-6).is_err());
        assert!(find_zeros(&p, 1.0, 2.0, 0.0, 1e-6).is_err());
        assert!(find_zeros(&p, 1.0, 2.0, 0.1, -1.0).is_err());
    }

    fn tmp(name: &str) -> PathBuf {
        std::env::temp_dir().join(format!("nzlab-{}-{}.csv", name, std::process::id()))
    }

    fn sample_records() -> Vec<ZeroRecord> {
        vec![
            ZeroRecord {
                n: 1,
                gamma: 14.134725,
                bracket: (14.134720, 14.134730),
                tol: 1e-5,
                route: Route::Direct,
            },
            ZeroRecord {
                n: 2,
                gamma: 7.769080,
                bracket: (7.769075, 7.769085),
                tol: 1e-5,
                route: Route::Phi,
            },
        ]
    }

    #[test]
    fn cache_round_trip_and_determinism() {
        let path = tmp("cache");
        save_zero_cache(&path, &sample_records()).unwrap();
        let first = std::fs::read(&path).unwrap();
        let loaded = load_zero_cache(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0].route, Route::Direct);
        assert_eq!(loaded[1].route, Route::Phi);
        assert!((loaded[0].gamma - 14.134725).abs() < 1e-12);
        save_zero_cache(&path, &sample_records()).unwrap();
        let second = std::fs::read(&path).unwrap();
        assert_eq!(first, second, "cache writes must be byte-identical");
        assert!(!path.with_extension("csv.lock").exists());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn extend_deduplicates_and_sorts() {
        let path = tmp("extend");
        std::fs::remove_file(&path).ok();
        save_zero_cache(&path, &sample_records()).unwrap();
        let refined = ZeroRecord {
            n: 1,
            gamma: 14.1347251,
            bracket: (14.13472505, 14.13472515),
            tol: 1e-7,
            route: Route::Direct,
        };
        let extra = ZeroRecord {
            n: 1,
            gamma: 21.022040,
            bracket: (21.022035, 21.022045),
            tol: 1e-5,
            route: Route::Direct,
        };
        let merged = extend_zero_cache(&path, &[refined.clone(), extra]).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(merged.len(), 3);
        assert_eq!(merged[0].tol, 1e-7, "sharper record wins");
        assert!((merged[0].gamma - refined.gamma).abs() < 1e-12);
        assert!(merged[1].gamma > merged[0].gamma);
        assert_eq!(merged[2].n, 2);
    }

    #[test]
    fn stale_lock_reports_resource_error() {
        let path = tmp("locked");
        let lock = PathBuf::from(format!("{}.lock", path.display()));
        std::fs::write(&lock, b"").unwrap();
        let err = save_zero_cache(&path, &sample_records()).unwrap_err();
        std::fs::remove_file(&lock).ok();
        assert!(matches!(err, Error::Resource(_)));
    }
}
