//! Brute-force reference solvers shared by the integration tests. None of
//! this code goes through the library's fermion or Monte Carlo paths.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

/// `sz_i` eigenvalue in basis state `b`.
fn sz(b: usize, i: usize) -> f64 {
    if (b >> i) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn bond_energy(couplings: &[f64], b: usize) -> f64 {
    couplings
        .iter()
        .enumerate()
        .map(|(i, j)| -j * sz(b, i) * sz(b, i + 1))
        .sum()
}

/// Dense `2^L` matrix of `-sum J sz sz - Gamma sum sx`.
pub fn dense_hamiltonian(couplings: &[f64], gamma: f64) -> DMatrix<f64> {
    let l = couplings.len() + 1;
    let dim = 1usize << l;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for b in 0..dim {
        h[(b, b)] = bond_energy(couplings, b);
        for i in 0..l {
            h[(b ^ (1 << i), b)] -= gamma;
        }
    }
    h
}

/// Sorted many-body spectrum.
pub fn dense_spectrum(couplings: &[f64], gamma: f64) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(dense_hamiltonian(couplings, gamma))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `(1/L) sum J_i (1 - <sz_i sz_{i+1}>)` from the full thermal trace. At
/// `temp == 0` the ground manifold (levels within 1e-9) is averaged.
pub fn dense_eps_c(couplings: &[f64], gamma: f64, temp: f64) -> f64 {
    let l = couplings.len() + 1;
    let dim = 1usize << l;
    let eig = SymmetricEigen::new(dense_hamiltonian(couplings, gamma));
    let e0 = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&e| {
            if temp == 0.0 {
                if e - e0 < 1e-9 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (-(e - e0) / temp).exp()
            }
        })
        .collect();
    let z: f64 = weights.iter().sum();
    let mut energy = 0.0;
    for (n, w) in weights.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        let col = eig.eigenvectors.column(n);
        let mut e = 0.0;
        for b in 0..dim {
            e += col[b] * col[b] * bond_energy(couplings, b);
        }
        energy += w * e;
    }
    energy /= z;
    // sum J (1 - <sz sz>) = sum J + <bond energy>
    (couplings.iter().sum::<f64>() + energy) / l as f64
}

fn apply_h(couplings: &[f64], gamma: f64, diag: &[f64], psi: &[Complex64], out: &mut [Complex64]) {
    let l = couplings.len() + 1;
    for b in 0..psi.len() {
        let mut acc = psi[b] * diag[b];
        for i in 0..l {
            acc -= psi[b ^ (1 << i)] * gamma;
        }
        out[b] = acc;
    }
}

/// Residual energy along a linear ramp from the ground state at `gamma0`,
/// integrating the many-body Schroedinger equation with RK4. Returns
/// `(t, eps_res)` at `n_out + 1` evenly spaced times.
pub fn dense_schrodinger_ramp(
    couplings: &[f64],
    gamma0: f64,
    tau: f64,
    dt: f64,
    n_out: usize,
) -> Vec<(f64, f64)> {
    let l = couplings.len() + 1;
    let dim = 1usize << l;
    let diag: Vec<f64> = (0..dim).map(|b| bond_energy(couplings, b)).collect();
    let eig = SymmetricEigen::new(dense_hamiltonian(couplings, gamma0));
    let g = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    let mut psi: Vec<Complex64> = eig.eigenvectors.column(g).iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let steps_per_out = ((tau / n_out as f64) / dt).round().max(1.0) as usize;
    let n_steps = steps_per_out * n_out;
    let h = tau / n_steps as f64;
    let field = |t: f64| gamma0 * (1.0 - t / tau);
    let residual = |psi: &[Complex64]| {
        let e: f64 = psi.iter().zip(&diag).map(|(a, d)| a.norm_sqr() * d).sum();
        (couplings.iter().sum::<f64>() + e) / l as f64
    };
    let mi = Complex64::new(0.0, -1.0);
    let mut out = vec![(0.0, residual(&psi))];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![Complex64::default(); dim],
        vec![Complex64::default(); dim],
        vec![Complex64::default(); dim],
        vec![Complex64::default(); dim],
        vec![Complex64::default(); dim],
    );
    for s in 0..n_steps {
        let t = s as f64 * h;
        apply_h(couplings, field(t), &diag, &psi, &mut k1);
        for b in 0..dim {
            k1[b] *= mi;
            tmp[b] = psi[b] + k1[b] * (0.5 * h);
        }
        apply_h(couplings, field(t + 0.5 * h), &diag, &tmp, &mut k2);
        for b in 0..dim {
            k2[b] *= mi;
            tmp[b] = psi[b] + k2[b] * (0.5 * h);
        }
        apply_h(couplings, field(t + 0.5 * h), &diag, &tmp, &mut k3);
        for b in 0..dim {
            k3[b] *= mi;
            tmp[b] = psi[b] + k3[b] * h;
        }
        apply_h(couplings, field(t + h), &diag, &tmp, &mut k4);
        for b in 0..dim {
            k4[b] *= mi;
            psi[b] += (k1[b] + k2[b] * 2.0 + k3[b] * 2.0 + k4[b]) * (h / 6.0);
        }
        if (s + 1) % steps_per_out == 0 {
            out.push(((s + 1) as f64 * h, residual(&psi)));
        }
    }
    out
}

/// Classical action of a Trotterized configuration, spins indexed
/// `spins[i][k]`.
pub fn brute_action(couplings: &[f64], spins: &[Vec<i8>], beta_p: f64, j_perp: f64) -> f64 {
    let l = spins.len();
    let p = spins[0].len();
    let mut k_cl = 0.0;
    for k in 0..p {
        for i in 0..l - 1 {
            k_cl -= beta_p * couplings[i] * (spins[i][k] * spins[i + 1][k]) as f64;
        }
        for i in 0..l {
            k_cl -= j_perp * (spins[i][k] * spins[i][(k + 1) % p]) as f64;
        }
    }
    k_cl
}

/// Unpacks configuration number `c` into `spins[i][k]`, bit `i * P + k`.
pub fn unpack(c: usize, l: usize, p: usize) -> Vec<Vec<i8>> {
    (0..l)
        .map(|i| (0..p).map(|k| if (c >> (i * p + k)) & 1 == 0 { 1 } else { -1 }).collect())
        .collect()
}

/// Trotter-averaged residual energy by direct summation.
pub fn brute_eps_avg(couplings: &[f64], spins: &[Vec<i8>]) -> f64 {
    let l = spins.len();
    let p = spins[0].len();
    let mut acc = 0.0;
    for i in 0..l - 1 {
        let mut s = 0.0;
        for k in 0..p {
            s += (spins[i][k] * spins[i + 1][k]) as f64;
        }
        acc += couplings[i] * (1.0 - s / p as f64);
    }
    acc / l as f64
}

/// Boltzmann weights `exp(-K)/Z` over all `2^(L P)` configurations.
pub fn boltzmann_weights(couplings: &[f64], p: usize, beta_p: f64, j_perp: f64) -> Vec<f64> {
    let l = couplings.len() + 1;
    let n = 1usize << (l * p);
    let actions: Vec<f64> = (0..n)
        .map(|c| brute_action(couplings, &unpack(c, l, p), beta_p, j_perp))
        .collect();
    let kmin = actions.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = actions.iter().map(|k| (-(k - kmin)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Exact `<eps_avg>` of the classical Trotter model.
pub fn exhaustive_eps_avg(couplings: &[f64], p: usize, beta_p: f64, j_perp: f64) -> f64 {
    let l = couplings.len() + 1;
    boltzmann_weights(couplings, p, beta_p, j_perp)
        .iter()
        .enumerate()
        .map(|(c, w)| w * brute_eps_avg(couplings, &unpack(c, l, p)))
        .sum()
}

/// `-1/2 log tanh(x)` evaluated without cancellation issues for the
/// moderate arguments used in tests.
pub fn closed_form_j_perp(beta_p: f64, gamma: f64) -> f64 {
    -0.5 * (beta_p * gamma).tanh().ln()
}

pub fn dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(v)
}
