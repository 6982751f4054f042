//! Dense eigendecomposition, conjugate-pair classification and a
//! pseudo-inverse probe for Jordan chains.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::{Mat, MatRef, Par};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::DynamoMatrix;

/// Eigenpair residual contract: `|M psi - lambda psi| <= EIG_RESIDUAL_TOL |M| |psi|`.
pub const EIG_RESIDUAL_TOL: f64 = 1e-8;

/// Relative factor for the default pair tolerance (times `max(1, |M|_max)`).
pub const DEFAULT_PAIR_TOL_FACTOR: f64 = 1e-9;

/// Singular values at or below this fraction of the largest are treated as zero.
pub const SVD_RANK_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairTag {
    Real,
    ConjugatePair(usize),
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Sorted by real part descending, then imaginary part descending.
    pub eigenvalues: Vec<Complex64>,
    /// Column `k` belongs to `eigenvalues[k]`, unit Euclidean norm.
    pub eigenvectors: Option<Mat<Complex64>>,
    pub classification: Vec<PairTag>,
    pub pair_tol: f64,
}

fn order(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im))
}

impl Spectrum {
    /// Builds a sorted, unclassified spectrum (every tag `Real`, `pair_tol = 0`).
    pub fn from_values(mut values: Vec<Complex64>) -> Self {
        values.sort_by(order);
        let n = values.len();
        Self {
            eigenvalues: values,
            eigenvectors: None,
            classification: vec![PairTag::Real; n],
            pair_tol: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvector(&self, k: usize) -> Option<Vec<Complex64>> {
        self.eigenvectors
            .as_ref()
            .map(|v| (0..v.nrows()).map(|i| v[(i, k)]).collect())
    }

    /// Largest `min_j |lambda_i - conj(lambda_j)|` over the spectrum.
    pub fn conjugation_defect(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|l| {
                self.eigenvalues
                    .iter()
                    .map(|m| (l - m.conj()).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    pub fn count_complex(&self) -> usize {
        self.classification
            .iter()
            .filter(|t| matches!(t, PairTag::ConjugatePair(_)))
            .count()
    }
}

pub fn max_abs(m: MatRef<'_, f64>) -> f64 {
    let mut s = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s = s.max(m[(i, j)].abs());
        }
    }
    s
}

fn inf_norm(m: MatRef<'_, f64>) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Eigendecomposition of a dense real matrix, single-threaded.
pub fn eigen_matrix(m: MatRef<'_, f64>, want_vectors: bool) -> Result<Spectrum> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "square matrix required");
    let mut s_re = faer::diag::Diag::<f64>::zeros(n);
    let mut s_im = faer::diag::Diag::<f64>::zeros(n);
    let mut u = want_vectors.then(|| Mat::<f64>::zeros(n, n));
    let right = if want_vectors {
        ComputeEigenvectors::Yes
    } else {
        ComputeEigenvectors::No
    };
    let mut buf = MemBuffer::new(evd::evd_scratch::<f64>(
        n,
        ComputeEigenvectors::No,
        right,
        Par::Seq,
        Default::default(),
    ));
    evd::evd_real(
        m,
        s_re.as_mut(),
        s_im.as_mut(),
        None,
        u.as_mut().map(|u| u.as_mut()),
        Par::Seq,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|_| Error::Solver { dim: n })?;

    // One product M U covers every residual: a pair stored in columns
    // (j, j+1) is v = u_j + i u_{j+1} with M v = (MU)_j + i (MU)_{j+1}.
    let mu = u.as_ref().map(|u| m * u);
    let norm_m = inf_norm(m).max(f64::MIN_POSITIVE);
    let mut values = Vec::with_capacity(n);
    let mut vectors: Vec<Vec<Complex64>> = Vec::new();
    let mut j = 0;
    while j < n {
        let (re, im) = (s_re[j], s_im[j]);
        let pair = im != 0.0;
        let lam = Complex64::new(re, im);
        if let (Some(u), Some(mu)) = (&u, &mu) {
            let col = |a: &Mat<f64>, i: usize| {
                Complex64::new(a[(i, j)], if pair { a[(i, j + 1)] } else { 0.0 })
            };
            let v: Vec<Complex64> = (0..n).map(|i| col(u, i)).collect();
            let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let res = (0..n).map(|i| (col(mu, i) - lam * v[i]).norm_sqr()).sum::<f64>().sqrt();
            if !(res <= EIG_RESIDUAL_TOL * norm_m * nv) {
                return Err(Error::Solver { dim: n });
            }
            let conj: Option<Vec<Complex64>> = pair.then(|| v.iter().map(|z| z.conj()).collect());
            vectors.push(v);
            vectors.extend(conj);
        }
        if pair {
            values.push(lam);
            values.push(lam.conj());
            j += 2;
        } else {
            values.push(lam);
            j += 1;
        }
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| order(&values[a], &values[b]).then(a.cmp(&b)));
    let sorted: Vec<Complex64> = idx.iter().map(|&k| values[k]).collect();

    let eigenvectors = want_vectors.then(|| {
        let mut out = Mat::<Complex64>::zeros(n, n);
        for (col, &k) in idx.iter().enumerate() {
            let v = &vectors[k];
            let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for i in 0..n {
                out[(i, col)] = v[i] / nv;
            }
        }
        out
    });

    let spec = Spectrum {
        eigenvalues: sorted,
        eigenvectors,
        classification: vec![PairTag::Real; n],
        pair_tol: 0.0,
    };
    let tol = DEFAULT_PAIR_TOL_FACTOR * max_abs(m).max(1.0);
    classify_pairs(spec, tol)
}

/// Eigendecomposition of the dynamo matrix, classified with the default tolerance.
pub fn eigen(m: &DynamoMatrix, want_vectors: bool) -> Result<Spectrum> {
    eigen_matrix(m.matrix(), want_vectors)
}

/// Greedy nearest-conjugate matching; ties go to the smallest index.
pub fn classify_pairs(mut spec: Spectrum, pair_tol: f64) -> Result<Spectrum> {
    if !(pair_tol > 0.0) {
        return Err(Error::Config(format!("pair_tol must be positive, got {pair_tol}")));
    }
    let n = spec.eigenvalues.len();
    let mut tags: Vec<Option<PairTag>> = vec![None; n];
    for i in 0..n {
        if spec.eigenvalues[i].im.abs() <= pair_tol {
            tags[i] = Some(PairTag::Real);
        }
    }
    for i in 0..n {
        if tags[i].is_some() {
            continue;
        }
        let target = spec.eigenvalues[i].conj();
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if j == i || tags[j].is_some() {
                continue;
            }
            let d = (spec.eigenvalues[j] - target).norm();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        match best {
            Some((j, d)) if d <= pair_tol => {
                tags[i] = Some(PairTag::ConjugatePair(j));
                tags[j] = Some(PairTag::ConjugatePair(i));
            }
            _ => {
                let l = spec.eigenvalues[i];
                return Err(Error::Classification {
                    index: i,
                    re: l.re,
                    im: l.im,
                    tol: pair_tol,
                });
            }
        }
    }
    spec.classification = tags.into_iter().map(|t| t.expect("every index tagged")).collect();
    spec.pair_tol = pair_tol;
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct JordanProbe {
    pub lambda0: Complex64,
    /// `|(M - lambda0) psi| / |psi|`.
    pub eigvec_residual: f64,
    /// `|(M - lambda0) chi - psi| / |psi|`.
    pub chain_residual: f64,
    /// Minimum-norm solution on the retained singular subspace; unnormalized.
    pub chain_vector: Vec<Complex64>,
}

/// Solves `(M - lambda0) chi = psi` by truncated SVD: the smallest singular
/// direction is always discarded, together with any singular value below
/// `SVD_RANK_TOL * sigma_max`.
pub fn jordan_probe(m: MatRef<'_, f64>, lambda0: Complex64, psi: &[Complex64]) -> Result<JordanProbe> {
    let n = m.nrows();
    if psi.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: psi.len(),
        });
    }
    let a = Mat::<Complex64>::from_fn(n, n, |i, j| {
        let v = Complex64::new(m[(i, j)], 0.0);
        if i == j {
            v - lambda0
        } else {
            v
        }
    });
    let svd = a.svd().map_err(|_| Error::Solver { dim: n })?;
    let (u, s, v) = (svd.U(), svd.S(), svd.V());
    let sigma: Vec<f64> = (0..n).map(|k| s[k].re).collect();
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let smallest = (0..n)
        .min_by(|&a, &b| sigma[a].total_cmp(&sigma[b]))
        .expect("nonempty");

    let mut chi = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        if k == smallest || sigma[k] <= SVD_RANK_TOL * smax {
            continue;
        }
        let mut coef = Complex64::new(0.0, 0.0);
        for i in 0..n {
            coef += u[(i, k)].conj() * psi[i];
        }
        coef /= sigma[k];
        for i in 0..n {
            chi[i] += v[(i, k)] * coef;
        }
    }

    let apply = |x: &[Complex64]| -> Vec<Complex64> {
        (0..n)
            .map(|i| (0..n).map(|j| a[(i, j)] * x[j]).sum::<Complex64>())
            .collect()
    };
    let norm = |x: &[Complex64]| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let npsi = norm(psi).max(f64::MIN_POSITIVE);
    let a_psi = apply(psi);
    let a_chi = apply(&chi);
    let diff: Vec<Complex64> = a_chi.iter().zip(psi).map(|(x, y)| x - y).collect();
    Ok(JordanProbe {
        lambda0,
        eigvec_residual: norm(&a_psi) / npsi,
        chain_residual: norm(&diff) / npsi,
        chain_vector: chi,
    })
}
