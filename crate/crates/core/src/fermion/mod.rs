//! Exact free-fermion solution of the open transverse-field Ising chain.
//!
//! After a Jordan-Wigner transformation the chain becomes the quadratic form
//!
//! ```text
//! H = -sum_i J_i (c+_i - c_i)(c+_{i+1} + c_{i+1}) - Gamma sum_i (2 c+_i c_i - 1)
//! ```
//!
//! Two equivalent representations are kept:
//!
//! * [`BdgMatrix`]: the `2L x 2L` Nambu matrix `M` with `H = 1/2 Psi+ M Psi`,
//!   `Psi = (c_1..c_L, c+_1..c+_L)`;
//! * [`ChainModes`]: the Majorana form `H = i a^T D b` with `a_i = c+_i + c_i`,
//!   `b_i = i (c+_i - c_i)` and `D` lower bidiagonal (`D_ii = -Gamma`,
//!   `D_{i+1,i} = -J_i`). The SVD `D = U S V^T` gives the quasiparticle
//!   energies `2 s_k` and, with `sz_i sz_{i+1} = i a_{i+1} b_i`,
//!
//! ```text
//! <sz_i sz_{i+1}>_T = -sum_k U_{i+1,k} tanh(s_k / T) V_{i,k}
//! ```
//!
//! Only nearest-neighbour correlators are needed, so no Jordan-Wigner
//! strings ever appear.

mod curve;
mod dynamics;

pub use curve::{tabulate_equilibrium, EquilibriumCurve, ThermalCurveFactory};
pub use dynamics::{
    coherent_qa_evolve, default_time_step, drift_limited_time_step, evolve_field_profile, BdgIntegrator, BdgState, QaOptions,
    MAX_FRAME_DEFECT,
};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::instances::Instance;

/// Nambu (Bogoliubov-de Gennes) matrix of the chain at field `gamma`.
#[derive(Clone, Debug)]
pub struct BdgMatrix {
    gamma: f64,
    length: usize,
    matrix: DMatrix<f64>,
}

impl BdgMatrix {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn length(&self) -> usize {
        self.length
    }

    /// Eigenvalues in ascending order; they come in `+/-` pairs.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Many-body ground-state energy, `-1/2` times the sum of positive
    /// eigenvalues.
    pub fn ground_energy(&self) -> f64 {
        -0.5 * self.spectrum().iter().filter(|&&e| e > 0.0).sum::<f64>()
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::Domain(format!(
            "transverse field must be finite and non-negative, got {gamma}"
        )));
    }
    Ok(())
}

/// Builds `M = [[A, B], [-B, -A]]` with `A_ii = -2 Gamma`,
/// `A_{i,i+1} = A_{i+1,i} = -J_i`, `B_{i,i+1} = -J_i`, `B_{i+1,i} = J_i`.
pub fn build_bdg_matrix(inst: &Instance, gamma: f64) -> Result<BdgMatrix> {
    check_gamma(gamma)?;
    let l = inst.len();
    let mut m = DMatrix::<f64>::zeros(2 * l, 2 * l);
    for i in 0..l {
        m[(i, i)] = -2.0 * gamma;
        m[(l + i, l + i)] = 2.0 * gamma;
    }
    for (i, &j) in inst.couplings().iter().enumerate() {
        // A block and its negative
        m[(i, i + 1)] = -j;
        m[(i + 1, i)] = -j;
        m[(l + i, l + i + 1)] = j;
        m[(l + i + 1, l + i)] = j;
        // B block (antisymmetric) and -B
        m[(i, l + i + 1)] = -j;
        m[(i + 1, l + i)] = j;
        m[(l + i, i + 1)] = j;
        m[(l + i + 1, i)] = -j;
    }
    Ok(BdgMatrix {
        gamma,
        length: l,
        matrix: m,
    })
}

/// Normal modes of the chain at a fixed field, from the SVD of the Majorana
/// coupling matrix. Independent of temperature, so one decomposition serves
/// every `T`.
#[derive(Clone, Debug)]
pub struct ChainModes {
    gamma: f64,
    couplings: Vec<f64>,
    singular: Vec<f64>,
    /// `U`, column-major `L x L`.
    left: DMatrix<f64>,
    /// `V`, column-major `L x L`.
    right: DMatrix<f64>,
}

/// Lower-bidiagonal Majorana coupling matrix `D`.
pub(crate) fn majorana_coupling_matrix(couplings: &[f64], gamma: f64) -> DMatrix<f64> {
    let l = couplings.len() + 1;
    let mut d = DMatrix::<f64>::zeros(l, l);
    for i in 0..l {
        d[(i, i)] = -gamma;
    }
    for (i, &j) in couplings.iter().enumerate() {
        d[(i + 1, i)] = -j;
    }
    d
}

impl ChainModes {
    pub fn new(inst: &Instance, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let d = majorana_coupling_matrix(inst.couplings(), gamma);
        let svd = nalgebra::SVD::try_new(d, true, true, f64::EPSILON, 0)
            .ok_or_else(|| Error::Accuracy("SVD of the coupling matrix did not converge".into()))?;
        let left = svd.u.expect("requested U");
        let right = svd.v_t.expect("requested V^T").transpose();
        Ok(ChainModes {
            gamma,
            couplings: inst.couplings().to_vec(),
            singular: svd.singular_values.iter().copied().collect(),
            left,
            right,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn length(&self) -> usize {
        self.couplings.len() + 1
    }

    /// Quasiparticle excitation energies `2 s_k`, unsorted.
    pub fn excitation_energies(&self) -> Vec<f64> {
        self.singular.iter().map(|s| 2.0 * s).collect()
    }

    pub fn ground_energy(&self) -> f64 {
        -self.singular.iter().sum::<f64>()
    }

    pub(crate) fn left(&self) -> &DMatrix<f64> {
        &self.left
    }

    pub(crate) fn right(&self) -> &DMatrix<f64> {
        &self.right
    }

    /// Mode weights `<1 - 2 n_k> = tanh(s_k / T)`. At `T = 0` every mode is
    /// empty, which for an exact zero mode is the `Gamma -> 0+` limit.
    fn mode_weights(&self, temp: f64) -> Vec<f64> {
        if temp == 0.0 {
            vec![1.0; self.singular.len()]
        } else {
            self.singular.iter().map(|s| (s / temp).tanh()).collect()
        }
    }

    /// Thermal `<sz_i sz_{i+1}>` for every bond `i`.
    pub fn bond_correlations(&self, temp: f64) -> Result<Vec<f64>> {
        check_temp(temp)?;
        let w = self.mode_weights(temp);
        let l = self.length();
        let mut out = vec![0.0; l - 1];
        for (k, &wk) in w.iter().enumerate() {
            let u = self.left.column(k);
            let v = self.right.column(k);
            for (i, c) in out.iter_mut().enumerate() {
                *c -= u[i + 1] * wk * v[i];
            }
        }
        Ok(out)
    }

    /// `eps_c(Gamma, T) = (1/L) sum_i J_i (1 - <sz_i sz_{i+1}>)`.
    pub fn eps_c(&self, temp: f64) -> Result<f64> {
        let corr = self.bond_correlations(temp)?;
        Ok(residual_from_correlations(&self.couplings, &corr))
    }
}

pub(crate) fn residual_from_correlations(couplings: &[f64], corr: &[f64]) -> f64 {
    let l = couplings.len() + 1;
    couplings
        .iter()
        .zip(corr)
        .map(|(j, c)| j * (1.0 - c))
        .sum::<f64>()
        / l as f64
}

fn check_temp(temp: f64) -> Result<()> {
    if !(temp >= 0.0 && temp.is_finite()) {
        return Err(Error::Domain(format!(
            "temperature must be finite and non-negative, got {temp}"
        )));
    }
    Ok(())
}

/// Thermal bond energy above the classical ground state, per spin.
pub fn equilibrium_eps_c(inst: &Instance, gamma: f64, temp: f64) -> Result<f64> {
    check_temp(temp)?;
    ChainModes::new(inst, gamma)?.eps_c(temp)
}
