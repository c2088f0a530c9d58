//! Gaussian two-mode entanglement measures.
//!
//! Covariance matrices use the quadrature order (X_A, Y_A, X_B, Y_B) and
//! vacuum-1/2 units. Joint-quadrature variances use vacuum 1.

use nalgebra::{Matrix4, SMatrix};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Quadrature order used by [`CovarianceMatrix4`] and its serialized form.
pub const ORDER: [&str; 4] = ["X_A", "Y_A", "X_B", "Y_B"];

/// Numerical zero for discriminants and eigenvalues.
pub const CLAMP_TOLERANCE: f64 = 1e-9;

/// Symmetric 4×4 second-moment matrix of (X_A, Y_A, X_B, Y_B).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix4 {
    m: [[f64; 4]; 4],
}

#[derive(Serialize, Deserialize)]
struct CovarianceRepr {
    order: Vec<String>,
    matrix: Vec<Vec<f64>>,
}

impl Serialize for CovarianceMatrix4 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CovarianceRepr {
            order: ORDER.iter().map(|s| s.to_string()).collect(),
            matrix: self.m.iter().map(|r| r.to_vec()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CovarianceMatrix4 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = CovarianceRepr::deserialize(d)?;
        if r.order != ORDER {
            return Err(D::Error::custom(format!(
                "unsupported quadrature order {:?}, expected {:?}",
                r.order, ORDER
            )));
        }
        if r.matrix.len() != 4 || r.matrix.iter().any(|row| row.len() != 4) {
            return Err(D::Error::custom("matrix must be 4x4"));
        }
        let mut m = [[0.0; 4]; 4];
        for (i, row) in r.matrix.iter().enumerate() {
            m[i].copy_from_slice(row);
        }
        CovarianceMatrix4::new(m).map_err(D::Error::custom)
    }
}

impl CovarianceMatrix4 {
    /// Builds a matrix, rejecting asymmetry larger than 1e-12 (relative to
    /// the largest entry). The stored matrix is exactly symmetrized.
    #[allow(clippy::needless_range_loop)]
    pub fn new(m: [[f64; 4]; 4]) -> Result<Self> {
        let scale = m.iter().flatten().fold(1.0_f64, |a, &x| a.max(x.abs()));
        for i in 0..4 {
            for j in 0..4 {
                if !m[i][j].is_finite() {
                    return Err(Error::input("covariance matrix has non-finite entries"));
                }
                if (m[i][j] - m[j][i]).abs() > 1e-12 * scale {
                    return Err(Error::input(format!(
                        "covariance matrix not symmetric at ({i},{j}): {} vs {}",
                        m[i][j], m[j][i]
                    )));
                }
            }
        }
        Ok(Self::symmetrized(m))
    }

    /// Builds a matrix from possibly asymmetric estimates by averaging the
    /// two triangles.
    pub fn symmetrized(m: [[f64; 4]; 4]) -> Self {
        let mut s = m;
        for i in 0..4 {
            for j in (i + 1)..4 {
                let v = 0.5 * (m[i][j] + m[j][i]);
                s[i][j] = v;
                s[j][i] = v;
            }
        }
        Self { m: s }
    }

    pub fn vacuum() -> Self {
        Self::diagonal([0.5; 4])
    }

    pub fn diagonal(d: [f64; 4]) -> Self {
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            m[i][i] = d[i];
        }
        Self { m }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn entries(&self) -> &[[f64; 4]; 4] {
        &self.m
    }

    fn block(&self, r: usize, c: usize) -> [[f64; 2]; 2] {
        [
            [self.m[r][c], self.m[r][c + 1]],
            [self.m[r + 1][c], self.m[r + 1][c + 1]],
        ]
    }

    /// Local block of mode A.
    pub fn alpha(&self) -> [[f64; 2]; 2] {
        self.block(0, 0)
    }

    /// Local block of mode B.
    pub fn beta(&self) -> [[f64; 2]; 2] {
        self.block(2, 2)
    }

    /// Correlation block between A (rows) and B (columns).
    pub fn gamma(&self) -> [[f64; 2]; 2] {
        self.block(0, 2)
    }

    pub fn det(&self) -> f64 {
        self.to_matrix().determinant()
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.m[i][j])
    }

    /// Entrywise map through a pure-loss channel of transmission `eta`.
    pub fn with_loss(&self, eta: f64) -> Self {
        let mut m = self.m;
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = eta * *x + if i == j { 0.5 * (1.0 - eta) } else { 0.0 };
            }
        }
        Self { m }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("matrix serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn det2(b: [[f64; 2]; 2]) -> f64 {
    b[0][0] * b[1][1] - b[0][1] * b[1][0]
}

/// Variances of the joint quadratures X_± = X_A ± X_B and Y_± = Y_A ± Y_B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EprVariances {
    pub v_x_plus: f64,
    pub v_y_minus: f64,
    pub v_x_minus: f64,
    pub v_y_plus: f64,
}

impl EprVariances {
    pub fn vacuum() -> Self {
        Self {
            v_x_plus: 1.0,
            v_y_minus: 1.0,
            v_x_minus: 1.0,
            v_y_plus: 1.0,
        }
    }
}

/// DGCZ inseparability (V(X_+) + V(Y_−))/2; below 1 certifies entanglement.
pub fn dgcz(v: &EprVariances) -> Result<f64> {
    for (name, x) in [
        ("v_x_plus", v.v_x_plus),
        ("v_y_minus", v.v_y_minus),
        ("v_x_minus", v.v_x_minus),
        ("v_y_plus", v.v_y_plus),
    ] {
        if !(x >= 0.0) {
            return Err(Error::input(format!(
                "{name} must be non-negative, got {x}"
            )));
        }
    }
    Ok(0.5 * (v.v_x_plus + v.v_y_minus))
}

pub fn epr_from_cm(cm: &CovarianceMatrix4) -> EprVariances {
    let s = cm.entries();
    EprVariances {
        v_x_plus: s[0][0] + s[2][2] + 2.0 * s[0][2],
        v_x_minus: s[0][0] + s[2][2] - 2.0 * s[0][2],
        v_y_plus: s[1][1] + s[3][3] + 2.0 * s[1][3],
        v_y_minus: s[1][1] + s[3][3] - 2.0 * s[1][3],
    }
}

/// Smallest symplectic eigenvalue ν̃_− of the partially transposed matrix.
pub fn symplectic_nu_min(cm: &CovarianceMatrix4) -> Result<f64> {
    let delta = det2(cm.alpha()) + det2(cm.beta()) - 2.0 * det2(cm.gamma());
    let det = cm.det();
    let mut disc = delta * delta - 4.0 * det;
    if disc < 0.0 {
        if disc < -CLAMP_TOLERANCE {
            return Err(Error::Unphysical(format!(
                "negative discriminant {disc:e} in symplectic spectrum"
            )));
        }
        disc = 0.0;
    }
    let inner = 0.5 * (delta - disc.sqrt());
    if inner < 0.0 {
        if inner < -CLAMP_TOLERANCE {
            return Err(Error::Unphysical(format!(
                "negative squared symplectic eigenvalue {inner:e}"
            )));
        }
        return Ok(0.0);
    }
    Ok(inner.sqrt())
}

/// Logarithmic negativity max(0, −log₂ 2ν̃_−).
pub fn log_negativity(nu_min: f64) -> Result<f64> {
    if !(nu_min > 0.0) {
        return Err(Error::input(format!(
            "nu_min must be positive, got {nu_min}"
        )));
    }
    Ok((-(2.0 * nu_min).log2()).max(0.0))
}

/// Logarithmic negativity with the natural logarithm, max(0, −ln 2ν̃_−).
pub fn log_negativity_nats(nu_min: f64) -> Result<f64> {
    Ok(log_negativity(nu_min)? * std::f64::consts::LN_2)
}

/// Outcome of the uncertainty-principle check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Physicality {
    pub physical: bool,
    /// Smallest eigenvalue of σ + (i/2)Ω.
    pub margin: f64,
}

/// Checks σ + (i/2)Ω ⪰ 0, with Ω the two-mode symplectic form.
pub fn is_physical(cm: &CovarianceMatrix4) -> Physicality {
    // H = σ + iW with W = Ω/2 antisymmetric; the real embedding
    // [[σ, −W], [W, σ]] has the spectrum of H, each eigenvalue twice.
    let w = |i: usize, j: usize| -> f64 {
        let (bi, bj) = (i / 2, j / 2);
        if bi != bj {
            return 0.0;
        }
        match (i % 2, j % 2) {
            (0, 1) => 0.5,
            (1, 0) => -0.5,
            _ => 0.0,
        }
    };
    let s = cm.entries();
    let emb = SMatrix::<f64, 8, 8>::from_fn(|r, c| {
        let (i, j) = (r % 4, c % 4);
        match (r / 4, c / 4) {
            (0, 0) | (1, 1) => s[i][j],
            (0, 1) => -w(i, j),
            _ => w(i, j),
        }
    });
    let margin = emb.symmetric_eigenvalues().min();
    Physicality {
        physical: margin >= -CLAMP_TOLERANCE,
        margin,
    }
}

/// Rotates each mode's quadratures, X → X cos φ + Y sin φ and
/// Y → −X sin φ + Y cos φ, i.e. the matrix seen by detectors advanced by φ.
pub fn local_rotation(cm: &CovarianceMatrix4, phi_a: f64, phi_b: f64) -> CovarianceMatrix4 {
    let (sa, ca) = phi_a.sin_cos();
    let (sb, cbb) = phi_b.sin_cos();
    let r = Matrix4::new(
        ca, sa, 0.0, 0.0, //
        -sa, ca, 0.0, 0.0, //
        0.0, 0.0, cbb, sb, //
        0.0, 0.0, -sb, cbb,
    );
    let out = r * cm.to_matrix() * r.transpose();
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = out[(i, j)];
        }
    }
    CovarianceMatrix4::symmetrized(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tmsv(r: f64) -> CovarianceMatrix4 {
        let c = 0.5 * (2.0 * r).cosh();
        let s = 0.5 * (2.0 * r).sinh();
        CovarianceMatrix4::new([
            [c, 0.0, s, 0.0],
            [0.0, c, 0.0, -s],
            [s, 0.0, c, 0.0],
            [0.0, -s, 0.0, c],
        ])
        .unwrap()
    }

    #[test]
    fn dgcz_examples() {
        assert_eq!(dgcz(&EprVariances::vacuum()).unwrap(), 1.0);
        let v = EprVariances {
            v_x_plus: 10f64.powf(-0.18),
            v_y_minus: 1.0,
            v_x_minus: 1.0,
            v_y_plus: 1.0,
        };
        assert!((dgcz(&v).unwrap() - 0.83).abs() < 0.005);
        let bad = EprVariances {
            v_x_plus: -0.1,
            ..v
        };
        assert!(matches!(dgcz(&bad), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn epr_edges() {
        let e = epr_from_cm(&CovarianceMatrix4::vacuum());
        assert_eq!(e, EprVariances::vacuum());
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 0.5;
        }
        m[0][2] = -0.5;
        m[2][0] = -0.5;
        let e = epr_from_cm(&CovarianceMatrix4::new(m).unwrap());
        assert_eq!(e.v_x_plus, 0.0);
        assert_eq!(e.v_x_minus, 2.0);
    }

    #[test]
    fn symplectic_examples() {
        assert!((symplectic_nu_min(&CovarianceMatrix4::vacuum()).unwrap() - 0.5).abs() < 1e-15);
        let nu = symplectic_nu_min(&tmsv(0.5)).unwrap();
        assert!((2.0 * nu - (-1.0f64).exp()).abs() < 1e-12);
        assert!((2.0 * nu - 0.3679).abs() < 1e-4);
    }

    #[test]
    fn symplectic_rejects_garbage() {
        let m = CovarianceMatrix4::new([
            [0.5, 0.0, 3.0, 0.0],
            [0.0, 0.5, 0.0, 3.0],
            [3.0, 0.0, 0.5, 0.0],
            [0.0, 3.0, 0.0, 0.5],
        ])
        .unwrap();
        assert!(symplectic_nu_min(&m).is_err() || !is_physical(&m).physical);
    }

    #[test]
    fn log_negativity_examples() {
        assert_eq!(log_negativity(0.5).unwrap(), 0.0);
        assert!((log_negativity(0.395).unwrap() - 0.3401).abs() < 1e-4);
        assert!((log_negativity(0.25).unwrap() - 1.0).abs() < 1e-15);
        assert!(log_negativity(0.0).is_err());
        assert!(log_negativity(-1.0).is_err());
        assert!((log_negativity_nats(0.25).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn physicality_examples() {
        let v = is_physical(&CovarianceMatrix4::vacuum());
        assert!(v.physical && v.margin.abs() < 1e-12);
        assert!(!is_physical(&CovarianceMatrix4::diagonal([0.4, 0.4, 0.5, 0.5])).physical);
        assert!(is_physical(&tmsv(1.0)).physical);
    }

    #[test]
    fn rotation_identities() {
        let m = tmsv(0.3);
        assert_eq!(local_rotation(&m, 0.0, 0.0), m);
        let v = local_rotation(&CovarianceMatrix4::vacuum(), 0.7, -2.0);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 0.5 } else { 0.0 };
                assert!((v.get(i, j) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = local_rotation(&tmsv(0.37), 0.123, 2.5);
        let back = CovarianceMatrix4::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert!(m.to_json().contains("\"order\""));
        let bad = m.to_json().replace("\"Y_A\"", "\"Y_B\"");
        assert!(CovarianceMatrix4::from_json(&bad).is_err());
    }

    /// Random physical matrices: a TMSV, lossy, locally rotated, plus thermal noise.
    fn physical_cm() -> impl Strategy<Value = CovarianceMatrix4> {
        (
            0.0..1.2f64,
            0.05..1.0f64,
            -3.2..3.2f64,
            -3.2..3.2f64,
            0.0..0.5f64,
            0.0..0.5f64,
        )
            .prop_map(|(r, eta, pa, pb, na, nb)| {
                let m = local_rotation(&tmsv(r).with_loss(eta), pa, pb);
                let mut e = *m.entries();
                e[0][0] += na;
                e[1][1] += na;
                e[2][2] += nb;
                e[3][3] += nb;
                CovarianceMatrix4::new(e).unwrap()
            })
    }

    proptest! {
        #[test]
        fn nu_invariant_under_local_rotation(cm in physical_cm(), pa in -4.0..4.0f64, pb in -4.0..4.0f64) {
            let a = symplectic_nu_min(&cm).unwrap();
            let b = symplectic_nu_min(&local_rotation(&cm, pa, pb)).unwrap();
            prop_assert!((a - b).abs() < 1e-10);
        }

        #[test]
        fn dgcz_bounded_by_nu(cm in physical_cm()) {
            let bound = 2.0 * symplectic_nu_min(&cm).unwrap();
            for k in 0..64 {
                let phi = std::f64::consts::PI * k as f64 / 64.0;
                let i = dgcz(&epr_from_cm(&local_rotation(&cm, phi, phi))).unwrap();
                prop_assert!(i >= bound - 1e-9, "{} < {}", i, bound);
            }
        }

        #[test]
        fn product_states_are_separable(a in 0.5..5.0f64, b in 0.5..5.0f64) {
            let cm = CovarianceMatrix4::diagonal([a, a, b, b]);
            prop_assert_eq!(log_negativity(symplectic_nu_min(&cm).unwrap()).unwrap(), 0.0);
        }

        #[test]
        fn loss_never_decreases_nu(cm in physical_cm(), eta in 0.0..1.0f64) {
            // Loss pulls ν̃_− towards 1/2, so the statement is about entangled inputs.
            let before = symplectic_nu_min(&cm).unwrap();
            prop_assume!(before < 0.5);
            let after = symplectic_nu_min(&cm.with_loss(eta)).unwrap();
            prop_assert!(after >= before - 1e-12);
        }

        #[test]
        fn generated_states_are_physical(cm in physical_cm()) {
            prop_assert!(is_physical(&cm).physical);
        }
    }
}
