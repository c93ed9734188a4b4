//! Linearized attitude-error plants for the hybrid VTOL vehicle, their trim
//! points, and model file I/O.
//!
//! Two models ship built in: a 4-state longitudinal model for level flight
//! at 22.49 m/s with a single elevon input, and a 6-state attitude model for
//! hover with four motor PWM inputs. Both measure the full state (`C = I`).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlightMode {
    Level,
    Hover,
}

/// Steady operating condition the error dynamics are linearized about.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrimPoint {
    pub flight_mode: FlightMode,
    /// Trim airspeed, m/s.
    pub airspeed: f64,
    /// Trim body rates `[p, q, r]`, rad/s.
    pub rates: [f64; 3],
    /// Trim body velocities `[u, v, w]`, m/s.
    pub body_velocities: [f64; 3],
}

/// State-space error dynamics
/// `x' = A x + Bu u + Bw w`, `y = C x`, `z = Cz x + Du u`.
///
/// Angles are in rad, rates in rad/s, velocities in m/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub name: String,
    pub states: Vec<String>,
    pub inputs: Vec<String>,
    pub a: Matrix,
    pub bu: Matrix,
    pub bw: Matrix,
    pub c: Matrix,
    pub cz: Matrix,
    pub du: Matrix,
    pub trim: TrimPoint,
}

impl LinearModel {
    pub fn n_states(&self) -> usize {
        self.a.rows()
    }

    pub fn n_inputs(&self) -> usize {
        self.bu.cols()
    }

    pub fn n_disturbances(&self) -> usize {
        self.bw.cols()
    }

    /// Checks cross-matrix dimension consistency and entry finiteness.
    pub fn validate(&self) -> Result<()> {
        let n = self.a.rows();
        if !self.a.is_square() {
            return Err(Error::DimensionMismatch {
                what: "A".into(),
                expected: (n, n),
                got: (self.a.rows(), self.a.cols()),
            });
        }
        self.bu.check_dims(n, self.bu.cols(), "Bu")?;
        self.bw.check_dims(n, self.bw.cols(), "Bw")?;
        self.c.check_dims(self.c.rows(), n, "C")?;
        self.cz.check_dims(self.cz.rows(), n, "Cz")?;
        self.du.check_dims(self.cz.rows(), self.bu.cols(), "Du")?;
        if self.states.len() != n {
            return Err(Error::Parse {
                context: self.name.clone(),
                message: format!("{} state labels for {} states", self.states.len(), n),
            });
        }
        if self.inputs.len() != self.bu.cols() {
            return Err(Error::Parse {
                context: self.name.clone(),
                message: format!(
                    "{} input labels for {} inputs",
                    self.inputs.len(),
                    self.bu.cols()
                ),
            });
        }
        for (m, label) in [
            (&self.a, "A"),
            (&self.bu, "Bu"),
            (&self.bw, "Bw"),
            (&self.c, "C"),
            (&self.cz, "Cz"),
            (&self.du, "Du"),
        ] {
            if !m.all_finite() {
                return Err(Error::Parse {
                    context: self.name.clone(),
                    message: format!("non-finite entry in {label}"),
                });
            }
        }
        Ok(())
    }

    /// Replaces the performance pair `(Cz, Du)`, e.g. to install a custom
    /// disturbance-attenuation weighting.
    pub fn with_performance(mut self, cz: Matrix, du: Matrix) -> Result<Self> {
        cz.check_dims(cz.rows(), self.n_states(), "Cz")?;
        du.check_dims(cz.rows(), self.n_inputs(), "Du")?;
        self.cz = cz;
        self.du = du;
        Ok(self)
    }

    /// Controllability matrix `[Bu, A Bu, ..., A^{n-1} Bu]`.
    pub fn controllability_matrix(&self) -> Matrix {
        let n = self.n_states();
        let mut block = self.bu.clone();
        let mut ctrb = block.clone();
        for _ in 1..n {
            block = &self.a * &block;
            ctrb = ctrb.hstack(&block);
        }
        ctrb
    }

    pub fn is_controllable(&self) -> bool {
        linalg::rank(&self.controllability_matrix()) == self.n_states()
    }
}

/// Default LQR weights for each built-in model; also used to form the
/// matched performance pair `Cz = [Q^{1/2}; 0]`, `Du = [0; R^{1/2}]`.
pub fn default_lqr_weights(mode: FlightMode) -> (Matrix, Matrix) {
    match mode {
        FlightMode::Level => (Matrix::diag(&[1.0, 0.01, 0.01, 10.0]), Matrix::diag(&[1.0])),
        FlightMode::Hover => (
            Matrix::diag(&[50.0, 50.0, 50.0, 1.0, 1.0, 1.0]),
            Matrix::diag(&[0.01, 0.01, 0.01, 0.01]),
        ),
    }
}

/// Stacks `(Q, R)` into the performance pair `(Cz, Du)` with
/// `Cz^T Cz = Q`, `Du^T Du = R`, `Cz^T Du = 0`.
pub fn performance_from_weights(
    q: &Matrix,
    r: &Matrix,
    tol: &Tolerances,
) -> Result<(Matrix, Matrix)> {
    let n = q.rows();
    let m = r.rows();
    let q_root = linalg::sym_psd_sqrt(q, tol)?;
    let r_root = linalg::sym_psd_sqrt(r, tol)?;
    let cz = q_root.vstack(&Matrix::zeros(m, n));
    let du = Matrix::zeros(n, m).vstack(&r_root);
    Ok((cz, du))
}

/// 4-state longitudinal error model for level flight at 22.49 m/s.
///
/// States `[theta, u, w, q]`, single elevon input; the gust disturbance
/// enters the pitch-acceleration row (`Bw = e4`).
pub fn build_level_model() -> LinearModel {
    let a = Matrix::from_rows(&[
        &[0.0, 0.0, 0.0, 1.0],
        &[0.0, 0.0002, -0.0235, -0.1360],
        &[0.0, 0.0011, -0.1793, 20.4845],
        &[0.0, 0.0135, -2.1745, -3.2657],
    ]);
    let bu = Matrix::col_vec(&[0.0, 0.0009, -0.0407, -0.6544]);
    let bw = Matrix::col_vec(&[0.0, 0.0, 0.0, 1.0]);
    let (q, r) = default_lqr_weights(FlightMode::Level);
    let (cz, du) = performance_from_weights(&q, &r, &Tolerances::default())
        .expect("built-in weights are diagonal PSD");
    LinearModel {
        name: "level".into(),
        states: vec!["theta".into(), "u".into(), "w".into(), "q".into()],
        inputs: vec!["elevon".into()],
        c: Matrix::identity(4),
        a,
        bu,
        bw,
        cz,
        du,
        trim: TrimPoint {
            flight_mode: FlightMode::Level,
            airspeed: 22.49,
            rates: [0.0, 0.0, 0.0],
            body_velocities: [22.49, 0.0, 0.0],
        },
    }
}

/// 6-state attitude error model for hover.
///
/// States `[phi, theta, psi, p, q, r]`, four motor PWM inputs; `A` is the
/// double-integrator block form and the gust disturbance drives all three
/// rate rows through one scalar channel.
pub fn build_hover_model() -> LinearModel {
    let mut a = Matrix::zeros(6, 6);
    a.set_block(0, 3, &Matrix::identity(3));
    let bu_lower = Matrix::from_rows(&[
        &[-153.5, 153.5, 153.5, -153.5],
        &[36.9, -37.1, 36.9, -37.1],
        &[-1.8, -1.8, 1.8, 1.8],
    ]);
    let bu = Matrix::zeros(3, 4).vstack(&bu_lower);
    let bw = Matrix::col_vec(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    let (q, r) = default_lqr_weights(FlightMode::Hover);
    let (cz, du) = performance_from_weights(&q, &r, &Tolerances::default())
        .expect("built-in weights are diagonal PSD");
    LinearModel {
        name: "hover".into(),
        states: vec![
            "phi".into(),
            "theta".into(),
            "psi".into(),
            "p".into(),
            "q".into(),
            "r".into(),
        ],
        inputs: vec!["pwm1".into(), "pwm2".into(), "pwm3".into(), "pwm4".into()],
        c: Matrix::identity(6),
        a,
        bu,
        bw,
        cz,
        du,
        trim: TrimPoint {
            flight_mode: FlightMode::Hover,
            airspeed: 0.0,
            rates: [0.0, 0.0, 0.0],
            body_velocities: [0.0, 0.0, 0.0],
        },
    }
}

// JSON schema used on disk: matrices as row-major nested arrays.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    name: String,
    states: Vec<String>,
    inputs: Vec<String>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "Bu")]
    bu: Vec<Vec<f64>>,
    #[serde(rename = "Bw")]
    bw: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    #[serde(rename = "Cz")]
    cz: Vec<Vec<f64>>,
    #[serde(rename = "Du")]
    du: Vec<Vec<f64>>,
    trim: TrimPoint,
}

fn to_nested(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn from_nested(rows: &[Vec<f64>], what: &str) -> Result<Matrix> {
    let r = rows.len();
    if r == 0 {
        return Err(Error::Parse {
            context: what.into(),
            message: "empty matrix".into(),
        });
    }
    let c = rows[0].len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != c {
            return Err(Error::Parse {
                context: what.into(),
                message: format!("row {i} has {} entries, expected {c}", row.len()),
            });
        }
    }
    Ok(Matrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn save_model(model: &LinearModel, path: &Path) -> Result<()> {
    let file = ModelFile {
        name: model.name.clone(),
        states: model.states.clone(),
        inputs: model.inputs.clone(),
        a: to_nested(&model.a),
        bu: to_nested(&model.bu),
        bw: to_nested(&model.bw),
        c: to_nested(&model.c),
        cz: to_nested(&model.cz),
        du: to_nested(&model.du),
        trim: model.trim.clone(),
    };
    let json = serde_json::to_string_pretty(&file).expect("model serialization cannot fail");
    fs::write(path, json)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<LinearModel> {
    let text = fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        context: path.display().to_string(),
        message: e.to_string(),
    })?;
    let model = LinearModel {
        name: file.name,
        states: file.states,
        inputs: file.inputs,
        a: from_nested(&file.a, "A")?,
        bu: from_nested(&file.bu, "Bu")?,
        bw: from_nested(&file.bw, "Bw")?,
        c: from_nested(&file.c, "C")?,
        cz: from_nested(&file.cz, "Cz")?,
        du: from_nested(&file.du, "Du")?,
        trim: file.trim,
    };
    model.validate()?;
    Ok(model)
}
