//! Reference values of `Y` and `Ỹ` with tolerance-checked comparisons.

use std::f64::consts::{LN_2, PI};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermo;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Exact `Y^{(n)}(π/3)` for `n = 0..=6`.
pub fn y_pi_third() -> [f64; 7] {
    let p = PI;
    let s = SQRT3;
    [
        4.0 / 3.0,
        -25.0 / (6.0 * s),
        18.0 * s / p - 3.0,
        463.0 / (8.0 * s) - 54.0 / p - 243.0 * s / (p * p),
        15059.0 / 18.0 - 9306.0 * s / (5.0 * p) + 972.0 / (p * p) + 3888.0 * s / p.powi(3),
        -33185.0 * s / 4.0 + 8946.0 / p + 72495.0 * s / (p * p) - 19440.0 / p.powi(3) - 72900.0 * s / p.powi(4),
        -3938533.0 / 6.0 + 10658034.0 * s / (7.0 * p) - 425250.0 / (p * p) - 2658420.0 * s / p.powi(3)
            + 437400.0 / p.powi(4)
            + 1574640.0 * s / p.powi(5),
    ]
}

/// Coefficients of `e^{-λ}, e^{-3λ}, e^{-5λ}` in the large-λ expansion of `Ỹ`.
pub const YTILDE_TAIL: [f64; 3] = [2.0, 10.0, 10.0];

/// Fits `Ỹ(λ) = a e^{-λ} + b e^{-3λ} + c e^{-5λ}` exactly through three
/// sample points.
pub fn ytilde_tail_fit(lambdas: [f64; 3]) -> Result<[f64; 3]> {
    let m = Matrix3::from_fn(|i, j| (-((2 * j + 1) as f64) * lambdas[i]).exp());
    let rhs = Vector3::from_iterator(lambdas.iter().map(|&l| thermo::ytilde(l)).collect::<Result<Vec<_>>>()?);
    let x = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::numeric("singular tail fit", f64::NAN))?;
    Ok([x[0], x[1], x[2]])
}

/// One reference comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub computed: f64,
    /// Absolute unless `relative` is set.
    pub tolerance: f64,
    pub relative: bool,
}

impl Check {
    pub fn error(&self) -> f64 {
        let d = (self.computed - self.expected).abs();
        if self.relative {
            d / self.expected.abs()
        } else {
            d
        }
    }

    pub fn passed(&self) -> bool {
        self.error() <= self.tolerance
    }
}

/// All reference checks on `Y` and `Ỹ`.
pub fn checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let d = thermo::y_derivs(PI / 3.0, 6)?;
    let want = y_pi_third();
    for n in 0..=6 {
        out.push(Check {
            name: if n == 0 { "Y(pi/3)".into() } else { format!("Y^({n})(pi/3)") },
            expected: want[n],
            computed: d[n],
            tolerance: match n {
                0 => 1e-10,
                1..=4 => 1e-8,
                _ => 1e-5,
            },
            relative: false,
        });
    }
    out.push(Check {
        name: "Y(pi/2)".into(),
        expected: 2.0 / PI,
        computed: thermo::y(PI / 2.0)?,
        tolerance: 1e-10,
        relative: false,
    });
    out.push(Check {
        name: "Y'(pi/2)".into(),
        expected: -(0.5 + 2.0 / (PI * PI)),
        computed: thermo::y_deriv(PI / 2.0, 1)?,
        tolerance: 1e-8,
        relative: false,
    });
    let g = 1e-3;
    out.push(Check {
        name: "gamma^2 Y(gamma) at gamma=1e-3".into(),
        expected: 2.0 * LN_2,
        computed: g * g * thermo::y(g)?,
        tolerance: 1e-4,
        relative: false,
    });
    let fit = ytilde_tail_fit([4.0, 5.0, 6.0])?;
    for (k, (c, e)) in fit.iter().zip(YTILDE_TAIL).enumerate() {
        out.push(Check {
            name: format!("Ytilde e^(-{}x) coefficient", 2 * k + 1),
            expected: e,
            computed: *c,
            tolerance: 1e-6,
            relative: true,
        });
    }
    Ok(out)
}
