//! `stability`, `eigcheck` and `ov`: analytic tables that need no
//! simulation.

use std::path::Path;

use platoon_core::ovfunc::fundamental_diagram;
use platoon_core::stability::{eig_oracle, neutral_line, threshold, LinearQuery, Threshold};
use platoon_core::{Connectivity, ControlParams, OvParams};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{connectivity_name, RunConfig};
use crate::error::{CliError, Result};
use crate::output;
use crate::simulate::thread_pool;

/// Headway grid given as inclusive range plus spacing.
#[derive(Debug, Clone, Copy)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Range {
    pub fn values(&self, name: &str) -> Result<Vec<f64>> {
        let Range { min, max, step } = *self;
        if !(step > 0.0 && min.is_finite() && max >= min) {
            return Err(CliError::Usage(format!(
                "bad {name} range {min}..{max} step {step}"
            )));
        }
        let count = ((max - min) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| min + step * i as f64).collect())
    }
}

/// OV parameters from an optional config, defaults otherwise.
pub fn ov_params(config: Option<&Path>) -> Result<OvParams> {
    let ov = match config {
        Some(path) => RunConfig::load(path)?.ov,
        None => OvParams::default(),
    };
    ov.validate()?;
    Ok(ov)
}

fn check_delays(model: Connectivity, t_d: &[f64]) -> Result<()> {
    if model == Connectivity::None && t_d.iter().any(|&t| t != 0.0) {
        return Err(CliError::Usage(
            "unconnected leaders do not communicate, so t_d must be 0".into(),
        ));
    }
    Ok(())
}

fn effective_p(model: Connectivity, p: f64) -> f64 {
    if model == Connectivity::TwoWay {
        p
    } else {
        0.0
    }
}

pub const STABILITY_COLUMNS: [&str; 7] = [
    "model",
    "platoon_size",
    "p",
    "t_d_s",
    "h_m",
    "status",
    "a_star_per_s",
];

pub struct StabilityArgs<'a> {
    pub model: Connectivity,
    pub sizes: &'a [usize],
    pub p: f64,
    pub t_d: &'a [f64],
    pub h: Range,
    pub ov: OvParams,
    pub out: &'a Path,
}

/// Neutral stability lines, one row per `(N, t_d, h)`. `status` is
/// `finite` or `unstable_for_all_a`; the threshold is blank for the latter.
pub fn stability(args: StabilityArgs<'_>) -> Result<()> {
    check_delays(args.model, args.t_d)?;
    let h = args.h.values("h")?;
    let p = effective_p(args.model, args.p);
    let path = args.out;
    let mut out = output::csv_writer(path)?;
    let err = output::csv_error(path);
    out.write_record(STABILITY_COLUMNS).map_err(&err)?;
    let mut rows = 0;
    for &n in args.sizes {
        for &t_d in args.t_d {
            let line = neutral_line(
                args.model,
                n,
                p,
                t_d,
                (h[0], h[h.len() - 1]),
                h.len(),
                &args.ov,
            )?;
            for point in line {
                let (status, a_star) = match point.threshold {
                    Threshold::Finite(a) => ("finite", a.to_string()),
                    Threshold::UnstableForAllA => ("unstable_for_all_a", String::new()),
                };
                out.write_record([
                    connectivity_name(args.model).to_string(),
                    n.to_string(),
                    p.to_string(),
                    t_d.to_string(),
                    point.h.to_string(),
                    status.to_string(),
                    a_star,
                ])
                .map_err(&err)?;
                rows += 1;
            }
        }
    }
    out.flush()
        .map_err(CliError::io(format!("writing {}", path.display())))?;
    println!("{rows} rows written to {}", path.display());
    Ok(())
}

pub const EIGCHECK_FILE: &str = "eigcheck.csv";
pub const EIGCHECK_SUMMARY_FILE: &str = "eigcheck_summary.json";
pub const EIGCHECK_COLUMNS: [&str; 14] = [
    "model",
    "platoon_size",
    "n_platoons",
    "p",
    "t_d_s",
    "h_m",
    "a_per_s",
    "a_star_per_s",
    "max_real_per_s",
    "analytic",
    "oracle",
    "agree",
    "in_margin",
    "error",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigcheckSummary {
    pub points: usize,
    pub failed: usize,
    /// Solved points outside the margin band.
    pub compared: usize,
    pub agreed: usize,
    pub agreement_rate: Option<f64>,
    pub margin: f64,
}

pub struct EigcheckArgs<'a> {
    pub model: Connectivity,
    pub sizes: &'a [usize],
    pub n_platoons: usize,
    pub p: f64,
    pub t_d: f64,
    pub h: Range,
    pub a: Range,
    pub margin: f64,
    pub ov: OvParams,
    pub parallel: usize,
    pub out: &'a Path,
}

struct Point {
    n: usize,
    h: f64,
    a: f64,
    threshold: Threshold,
    oracle: std::result::Result<f64, String>,
}

fn stable_word(stable: bool) -> &'static str {
    if stable {
        "stable"
    } else {
        "unstable"
    }
}

/// Compares the closed-form criterion with the eigenvalue oracle on a grid.
/// A point counts towards the agreement rate unless its `a` lies within
/// `margin` (relative) of a finite threshold or its solve failed.
pub fn eigcheck(args: EigcheckArgs<'_>) -> Result<EigcheckSummary> {
    check_delays(args.model, &[args.t_d])?;
    if args.n_platoons == 0 {
        return Err(CliError::Usage("--m must be at least 1".into()));
    }
    if !(args.margin >= 0.0) {
        return Err(CliError::Usage("--margin must be non-negative".into()));
    }
    let p = effective_p(args.model, args.p);
    let (hs, as_) = (args.h.values("h")?, args.a.values("a")?);
    let mut grid = Vec::new();
    for &n in args.sizes {
        for &h in &hs {
            let t = threshold(args.model, n, h, p, args.t_d, &args.ov)?;
            grid.extend(as_.iter().map(|&a| (n, h, a, t)));
        }
    }
    let pool = thread_pool(args.parallel)?;
    let points: Vec<Point> = pool.install(|| {
        grid.par_iter()
            .map(|&(n, h, a, threshold)| {
                let control = ControlParams {
                    a,
                    p,
                    t_d: args.t_d,
                };
                let mut query = LinearQuery::uniform(args.model, n, args.n_platoons, h, control);
                query.ov = args.ov;
                let oracle = eig_oracle(&query)
                    .map(|o| o.max_real)
                    .map_err(|e| e.to_string());
                Point {
                    n,
                    h,
                    a,
                    threshold,
                    oracle,
                }
            })
            .collect()
    });

    output::ensure_dir(args.out)?;
    let path = args.out.join(EIGCHECK_FILE);
    let mut out = output::csv_writer(&path)?;
    let err = output::csv_error(&path);
    out.write_record(EIGCHECK_COLUMNS).map_err(&err)?;
    let mut summary = EigcheckSummary {
        points: points.len(),
        failed: 0,
        compared: 0,
        agreed: 0,
        agreement_rate: None,
        margin: args.margin,
    };
    for pt in &points {
        let analytic = pt.threshold.is_stable(pt.a);
        let in_margin = pt
            .threshold
            .value()
            .is_some_and(|t| (pt.a - t).abs() <= args.margin * t);
        let (max_real, oracle, agree, error) = match &pt.oracle {
            Ok(re) => {
                let agree = (*re < 0.0) == analytic;
                if !in_margin {
                    summary.compared += 1;
                    summary.agreed += usize::from(agree);
                }
                (
                    re.to_string(),
                    stable_word(*re < 0.0),
                    agree.to_string(),
                    String::new(),
                )
            }
            Err(e) => {
                summary.failed += 1;
                (String::new(), "", String::new(), e.clone())
            }
        };
        out.write_record([
            connectivity_name(args.model).to_string(),
            pt.n.to_string(),
            args.n_platoons.to_string(),
            p.to_string(),
            args.t_d.to_string(),
            pt.h.to_string(),
            pt.a.to_string(),
            pt.threshold
                .value()
                .map(|t| t.to_string())
                .unwrap_or_default(),
            max_real,
            stable_word(analytic).to_string(),
            oracle.to_string(),
            agree,
            in_margin.to_string(),
            error,
        ])
        .map_err(&err)?;
    }
    out.flush()
        .map_err(CliError::io(format!("writing {}", path.display())))?;
    if summary.compared > 0 {
        summary.agreement_rate = Some(summary.agreed as f64 / summary.compared as f64);
    }
    output::write_json(&args.out.join(EIGCHECK_SUMMARY_FILE), &summary)?;
    println!(
        "{} of {} compared points agree ({} in the margin band, {} failed)",
        summary.agreed,
        summary.compared,
        summary.points - summary.compared - summary.failed,
        summary.failed
    );
    Ok(summary)
}

pub const OV_COLUMNS: [&str; 5] = ["h_m", "v_mps", "dv_dh_per_s", "density_per_m", "flow_per_s"];

/// `V`, `V'` and the fundamental diagram sampled over a headway range.
pub fn ov_table(ov: &OvParams, h: Range, out: &Path) -> Result<()> {
    let hs = h.values("h")?;
    if hs[0] <= 0.0 {
        return Err(CliError::Usage("headways must be positive".into()));
    }
    let densities: Vec<f64> = hs.iter().map(|h| 1.0 / h).collect();
    let fd = fundamental_diagram(ov, &densities)?;
    let mut w = output::csv_writer(out)?;
    let err = output::csv_error(out);
    w.write_record(OV_COLUMNS).map_err(&err)?;
    for (&h, (k, q)) in hs.iter().zip(fd) {
        w.write_record([
            h.to_string(),
            ov.velocity(h).to_string(),
            ov.velocity_derivative(h).to_string(),
            k.to_string(),
            q.to_string(),
        ])
        .map_err(&err)?;
    }
    w.flush()
        .map_err(CliError::io(format!("writing {}", out.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_includes_both_ends() {
        let r = Range {
            min: 10.0,
            max: 34.0,
            step: 2.0,
        };
        let v = r.values("h").unwrap();
        assert_eq!(v.len(), 13);
        assert_eq!(v[12], 34.0);
        let a = Range {
            min: 0.2,
            max: 3.0,
            step: 0.2,
        };
        assert_eq!(a.values("a").unwrap().len(), 15);
        assert!(Range {
            min: 1.0,
            max: 0.0,
            step: 1.0
        }
        .values("h")
        .is_err());
    }
}
