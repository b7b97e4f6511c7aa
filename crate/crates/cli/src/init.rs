use hetdiff::InitialData;

use crate::error::{CliError, Result};
use crate::expr::Expr;

/// Half-width of the probe grid used to bound expression data.
const PROBE_EXTENT: f64 = 50.0;
const PROBE_POINTS: usize = 200_001;

/// Parses `dirac:X0`, `step:A:B`, `expr:F` or `expr:LEFT|RIGHT`.
pub fn parse_init(spec: &str) -> Result<InitialData> {
    let usage = |m: &str| CliError::Usage(format!("bad --init {spec:?}: {m}"));
    let (kind, rest) = spec.split_once(':').ok_or_else(|| usage("expected KIND:ARGS"))?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| usage(&format!("{s:?} is not a number")));
    match kind {
        "dirac" => Ok(InitialData::dirac(num(rest)?)?),
        "step" => {
            let (a, b) = rest.split_once(':').ok_or_else(|| usage("expected step:A:B"))?;
            Ok(InitialData::step(num(a)?, num(b)?)?)
        }
        "expr" => {
            let (l, r) = rest.split_once('|').unwrap_or((rest, rest));
            let left = Expr::parse(l).map_err(|e| usage(&e))?;
            let right = Expr::parse(r).map_err(|e| usage(&e))?;
            let bound = probe_bound(&left, -PROBE_EXTENT, 0.0).max(probe_bound(&right, 0.0, PROBE_EXTENT));
            if !bound.is_finite() {
                return Err(usage("expression is not finite on the probe grid"));
            }
            Ok(InitialData::sampled(move |x| left.eval(x), move |x| right.eval(x), bound * 1.01)?)
        }
        _ => Err(usage("KIND must be dirac, step or expr")),
    }
}

fn probe_bound(f: &Expr, a: f64, b: f64) -> f64 {
    (0..PROBE_POINTS)
        .map(|i| f.eval(a + (b - a) * i as f64 / (PROBE_POINTS - 1) as f64).abs())
        .fold(0.0, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v) })
}
