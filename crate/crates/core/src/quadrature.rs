//! Adaptive Gauss–Kronrod quadrature (G7–K15) on finite and semi-infinite
//! intervals. This is the test oracle for every closed-form constant in the
//! bounds module; nothing in a solver hot path depends on it.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

// K15 abscissae (positive half) and weights, QUADPACK values.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
// G7 weights, matching XGK indices 1, 3, 5, 7.
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadratureRule {
    Adaptive,
    /// Fixed uniform panels, one K15 evaluation per panel. No error control.
    FixedPanels(usize),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rule: QuadratureRule,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rule: QuadratureRule::Adaptive,
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_subdivisions: 4000,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.abs_tol <= 0.0 || self.rel_tol <= 0.0 {
            return Err(CoreError::InvalidInput("quadrature tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
}

fn kronrod_panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k15 = WGK[7] * f(c);
    let mut g7 = WG[3] * f(c);
    for i in 0..7 {
        let x = h * XGK[i];
        let fsum = f(c - x) + f(c + x);
        k15 += WGK[i] * fsum;
        if i % 2 == 1 {
            g7 += WG[i / 2] * fsum;
        }
    }
    (k15 * h, (k15 - g7).abs() * h)
}

/// Integrate `f` over `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, spec: &QuadratureSpec) -> Result<QuadResult> {
    spec.validate()?;
    let f: &dyn Fn(f64) -> f64 = &f;
    match spec.rule {
        QuadratureRule::FixedPanels(n) => {
            let n = n.max(1);
            let h = (b - a) / n as f64;
            let mut value = 0.0;
            let mut err = 0.0;
            for i in 0..n {
                let (v, e) = kronrod_panel(f, a + i as f64 * h, a + (i + 1) as f64 * h);
                value += v;
                err += e;
            }
            Ok(QuadResult { value, error_estimate: err })
        }
        QuadratureRule::Adaptive => {
            // worklist of (a, b, value, error), split the worst panel
            let (v0, e0) = kronrod_panel(f, a, b);
            let mut panels = vec![(a, b, v0, e0)];
            for _ in 0..spec.max_subdivisions {
                let value: f64 = panels.iter().map(|p| p.2).sum();
                let err: f64 = panels.iter().map(|p| p.3).sum();
                if err <= spec.abs_tol || err <= spec.rel_tol * value.abs() {
                    return Ok(QuadResult { value, error_estimate: err });
                }
                let worst = panels
                    .iter()
                    .enumerate()
                    .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
                    .map(|(i, _)| i)
                    .unwrap();
                let (pa, pb, _, _) = panels.swap_remove(worst);
                let mid = 0.5 * (pa + pb);
                if mid <= pa || mid >= pb {
                    break; // interval exhausted at machine precision
                }
                let (v1, e1) = kronrod_panel(f, pa, mid);
                let (v2, e2) = kronrod_panel(f, mid, pb);
                panels.push((pa, mid, v1, e1));
                panels.push((mid, pb, v2, e2));
            }
            let value: f64 = panels.iter().map(|p| p.2).sum();
            let err: f64 = panels.iter().map(|p| p.3).sum();
            if err <= spec.abs_tol || err <= spec.rel_tol * value.abs() {
                Ok(QuadResult { value, error_estimate: err })
            } else {
                Err(CoreError::QuadratureFailure(format!(
                    "error estimate {err:.3e} after {} subdivisions (value {value:.6e})",
                    spec.max_subdivisions
                )))
            }
        }
    }
}

/// Integrate `f` over `[a, infinity)` via the rational substitution
/// `x = a + t/(1-t)`. The mapped endpoint is never evaluated, so mildly
/// singular tails are handled by panel subdivision.
pub fn integrate_semi_infinite(
    f: impl Fn(f64) -> f64,
    a: f64,
    spec: &QuadratureSpec,
) -> Result<QuadResult> {
    let g = |t: f64| {
        let w = 1.0 - t;
        let x = a + t / w;
        f(x) / (w * w)
    };
    integrate(g, 0.0, 1.0, spec)
}
