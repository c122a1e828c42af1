//! Real branches of the Lambert W function, the inverse of `w ↦ w·eʷ`.
//!
//! Both branches are computed by Halley iteration on `w·eʷ − z = 0`. Initial
//! guesses by region:
//!
//! * `z < −1/4`: series about the branch point in `p = √(2(e·z + 1))`,
//!   `w ≈ −1 ± p − p²/3 ± 11p³/72` (`+` for W₀, `−` for W₋₁);
//! * W₀, `|z| < 1/4`: `z·(1 − z)`;
//! * W₀, `1/4 ≤ z ≤ 3`: `ln(1 + z)`;
//! * W₀, `z > 3`: `ln z − ln ln z + ln ln z / ln z`;
//! * W₋₁, `−1/4 ≤ z < 0`: the same asymptotic form in `ln(−z)`.

use std::f64::consts::E;

use crate::expr::EvalError;

/// `−1/e` rounded to the nearest double; both branches meet here at `w = −1`.
pub const BRANCH_POINT: f64 = -0.367_879_441_171_442_33;

const MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WBranch {
    /// W₀, defined for `z ≥ −1/e`, values `w ≥ −1`.
    Principal,
    /// W₋₁, defined for `−1/e ≤ z < 0`, values `w ≤ −1`.
    Lower,
}

impl WBranch {
    pub fn contains(self, z: f64) -> bool {
        match self {
            WBranch::Principal => z >= BRANCH_POINT && z.is_finite(),
            WBranch::Lower => (BRANCH_POINT..0.0).contains(&z),
        }
    }

    fn op_name(self) -> &'static str {
        match self {
            WBranch::Principal => "lambertw0",
            WBranch::Lower => "lambertwm1",
        }
    }
}

/// Lambert W on the requested real branch.
///
/// The result satisfies `|w·eʷ − z| ≤ 1e-12·max(1, |z|)`.
pub fn lambert_w(z: f64, branch: WBranch) -> Result<f64, EvalError> {
    if !branch.contains(z) {
        return Err(EvalError::Domain {
            op: branch.op_name(),
            arg: z,
        });
    }
    if z == BRANCH_POINT {
        return Ok(-1.0);
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    Ok(halley(z, initial_guess(z, branch)))
}

fn initial_guess(z: f64, branch: WBranch) -> f64 {
    if z < -0.25 {
        let p = (2.0 * (E * z + 1.0)).max(0.0).sqrt();
        let sign = match branch {
            WBranch::Principal => 1.0,
            WBranch::Lower => -1.0,
        };
        return -1.0 + sign * p - p * p / 3.0 + sign * 11.0 / 72.0 * p * p * p;
    }
    match branch {
        WBranch::Principal if z < 0.25 => z * (1.0 - z),
        WBranch::Principal if z <= 3.0 => z.ln_1p(),
        WBranch::Principal => {
            let l1 = z.ln();
            let l2 = l1.ln();
            l1 - l2 + l2 / l1
        }
        WBranch::Lower => {
            let l1 = (-z).ln();
            let l2 = (-l1).ln();
            l1 - l2 + l2 / l1
        }
    }
}

fn halley(z: f64, mut w: f64) -> f64 {
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - z;
        if f == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        // Flat spot at the branch point; the series guess is already exact there.
        if wp1.abs() < 1e-12 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    w
}
