//! Polarization bases and the joint two-photon polarization state.
//!
//! Single-photon kets live on the {|H>, |V>} basis; the joint state is a
//! 4x4 density matrix on |HH>, |HV>, |VH>, |VV> where the first slot is the
//! first-emitted (biexciton) photon and the second slot the exciton photon.

use nalgebra::{Complex, Matrix4, SMatrix, Vector2, Vector4};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Measurement polarizations: the three mutually unbiased bases used in
/// pair tomography. D/A are the +/-45 degree linear superpositions, R/L the
/// circular ones, with R = (|H> + i|V>)/sqrt(2) and L = (|H> - i|V>)/sqrt(2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Polarization {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Polarization {
    pub const ALL: [Polarization; 6] = [
        Polarization::H,
        Polarization::V,
        Polarization::D,
        Polarization::A,
        Polarization::R,
        Polarization::L,
    ];

    /// Jones vector on the {H, V} basis.
    pub fn ket(self) -> Vector2<C64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let re = |x: f64| C64::new(x, 0.0);
        let im = |x: f64| C64::new(0.0, x);
        match self {
            Polarization::H => Vector2::new(re(1.0), re(0.0)),
            Polarization::V => Vector2::new(re(0.0), re(1.0)),
            Polarization::D => Vector2::new(re(s), re(s)),
            Polarization::A => Vector2::new(re(s), re(-s)),
            Polarization::R => Vector2::new(re(s), im(s)),
            Polarization::L => Vector2::new(re(s), im(-s)),
        }
    }

    /// The orthogonal polarization in the same basis.
    pub fn orthogonal(self) -> Polarization {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
            Polarization::D => Polarization::A,
            Polarization::A => Polarization::D,
            Polarization::R => Polarization::L,
            Polarization::L => Polarization::R,
        }
    }
}

impl std::fmt::Display for Polarization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let c = match self {
            Polarization::H => 'H',
            Polarization::V => 'V',
            Polarization::D => 'D',
            Polarization::A => 'A',
            Polarization::R => 'R',
            Polarization::L => 'L',
        };
        write!(f, "{c}")
    }
}

impl std::str::FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" | "h" => Ok(Polarization::H),
            "V" | "v" => Ok(Polarization::V),
            "D" | "d" => Ok(Polarization::D),
            "A" | "a" => Ok(Polarization::A),
            "R" | "r" => Ok(Polarization::R),
            "L" | "l" => Ok(Polarization::L),
            other => Err(Error::invalid(
                "polarization",
                format!("unknown polarization {other:?}"),
            )),
        }
    }
}

/// Joint ket |ab> = |a>_XX (x) |b>_X.
pub fn joint_ket(xx: Polarization, x: Polarization) -> Vector4<C64> {
    let k = xx.ket().kronecker(&x.ket());
    Vector4::from_iterator(k.iter().copied())
}

/// Density matrix of an entangled-pair emission on the HV (x) HV basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonState {
    rho: Matrix4<C64>,
}

/// Numerical slack accepted by [`TwoPhotonState::validate`].
pub const HERMITICITY_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const EIGENVALUE_TOL: f64 = -1e-10;

impl TwoPhotonState {
    /// Wraps a density matrix after checking hermiticity, unit trace and
    /// positive semidefiniteness (within numerical slack).
    pub fn from_matrix(rho: Matrix4<C64>) -> Result<Self> {
        let state = TwoPhotonState { rho };
        state.validate()?;
        Ok(state)
    }

    /// Wraps a matrix that is trusted to be a valid density matrix by
    /// construction. Exists so hot paths can skip the eigenvalue check;
    /// debug builds still verify.
    pub(crate) fn from_matrix_unchecked(rho: Matrix4<C64>) -> Self {
        let state = TwoPhotonState { rho };
        debug_assert!(state.validate().is_ok());
        state
    }

    /// The maximally entangled state (|HH> + |VV>)/sqrt(2).
    pub fn phi_plus() -> Self {
        let h = C64::new(0.5, 0.0);
        let mut rho = Matrix4::zeros();
        rho[(0, 0)] = h;
        rho[(0, 3)] = h;
        rho[(3, 0)] = h;
        rho[(3, 3)] = h;
        TwoPhotonState { rho }
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.rho
    }

    /// Probability that the pair passes a joint projective measurement,
    /// Tr[rho (|a><a| (x) |b><b|)] with a on the XX arm and b on the X arm.
    pub fn joint_probability(&self, xx: Polarization, x: Polarization) -> f64 {
        let v = joint_ket(xx, x);
        (v.adjoint() * self.rho * v)[(0, 0)].re
    }

    /// Probability that the XX photon alone passes polarization `xx`.
    pub fn marginal_xx(&self, xx: Polarization) -> f64 {
        self.joint_probability(xx, Polarization::H) + self.joint_probability(xx, Polarization::V)
    }

    /// Probability that the X photon alone passes polarization `x`.
    pub fn marginal_x(&self, x: Polarization) -> f64 {
        self.joint_probability(Polarization::H, x) + self.joint_probability(Polarization::V, x)
    }

    /// Overlap <phi+| rho |phi+>.
    pub fn fidelity_phi_plus(&self) -> f64 {
        0.5 * (self.rho[(0, 0)].re + self.rho[(3, 3)].re) + self.rho[(0, 3)].re
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    /// Smallest eigenvalue. A Hermitian 4x4 complex matrix A + iB is
    /// embedded as the real symmetric [[A, -B], [B, A]], whose spectrum is
    /// that of the original with each eigenvalue doubled in multiplicity.
    pub fn min_eigenvalue(&self) -> f64 {
        let mut m = SMatrix::<f64, 8, 8>::zeros();
        for i in 0..4 {
            for j in 0..4 {
                let z = self.rho[(i, j)];
                m[(i, j)] = z.re;
                m[(i + 4, j + 4)] = z.re;
                m[(i, j + 4)] = -z.im;
                m[(i + 4, j)] = z.im;
            }
        }
        // Symmetrize away representation round-off before the eigensolve.
        m = (m + m.transpose()) * 0.5;
        m.symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks the density-matrix invariants: Hermitian to 1e-12, unit trace
    /// to 1e-12, eigenvalues above -1e-10.
    pub fn validate(&self) -> Result<()> {
        for i in 0..4 {
            for j in 0..4 {
                let d = self.rho[(i, j)] - self.rho[(j, i)].conj();
                if d.norm() > HERMITICITY_TOL {
                    return Err(Error::invalid(
                        "density_matrix",
                        format!("not Hermitian at ({i},{j}): residual {}", d.norm()),
                    ));
                }
            }
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::invalid(
                "density_matrix",
                format!("trace {tr} is not 1"),
            ));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < EIGENVALUE_TOL {
            return Err(Error::invalid(
                "density_matrix",
                format!("negative eigenvalue {min_eig}"),
            ));
        }
        Ok(())
    }
}
