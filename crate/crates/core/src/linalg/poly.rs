//! Real polynomials, characteristic polynomials by Faddeev-LeVerrier, and a
//! deterministic simultaneous root finder (Aberth-Ehrlich) with cluster
//! snapping so repeated eigenvalues come back at full accuracy instead of the
//! eps^(1/m) scatter a multiple root otherwise produces.

use super::{ComplexScalar, LinalgError, Matrix};

const EPS: f64 = f64::EPSILON;

/// Largest matrix size `characteristic_polynomial` accepts.
pub const CHARPOLY_MAX_N: usize = 12;

/// Real polynomial with coefficients in ascending degree order:
/// `coeffs[i]` multiplies `x^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Polynomial { coeffs }
    }

    /// Degree after ignoring exactly-zero leading coefficients.
    pub fn degree(&self) -> usize {
        let mut d = self.coeffs.len().saturating_sub(1);
        while d > 0 && self.coeffs[d] == 0.0 {
            d -= 1;
        }
        d
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: ComplexScalar) -> ComplexScalar {
        self.coeffs
            .iter()
            .rev()
            .fold(ComplexScalar::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Horner value together with the running bound `sum |c_i| |z|^i`, the
    /// noise floor against which a residual is judged converged.
    pub fn eval_with_bound(&self, z: ComplexScalar) -> (ComplexScalar, f64) {
        let r = z.norm();
        let mut acc = ComplexScalar::new(0.0, 0.0);
        let mut bound = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
            bound = bound * r + c.abs();
        }
        (acc, bound)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::new(vec![0.0]);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| i as f64 * c)
            .collect();
        Polynomial::new(coeffs)
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }

    /// Monic polynomial with the given real roots, by direct expansion.
    pub fn from_real_roots(roots: &[f64]) -> Polynomial {
        let mut p = Polynomial::new(vec![1.0]);
        for &r in roots {
            p = p.mul(&Polynomial::new(vec![-r, 1.0]));
        }
        p
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Monic characteristic polynomial det(xI - A) by the Faddeev-LeVerrier
/// recurrence, ascending coefficients. Exact on integer matrices whose
/// intermediates stay below 2^53; supports n <= 12.
pub fn characteristic_polynomial(a: &Matrix) -> Result<Polynomial, LinalgError> {
    assert!(a.is_square(), "characteristic polynomial needs a square matrix");
    let n = a.rows();
    if n > CHARPOLY_MAX_N {
        return Err(LinalgError::UnsupportedSize { got: n, max: CHARPOLY_MAX_N });
    }
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let mut m = Matrix::identity(n);
    for k in 1..=n {
        let am = a.matmul(&m);
        let c = -am.trace() / k as f64;
        coeffs[n - k] = c;
        m = am;
        for i in 0..n {
            m.set(i, i, m.get(i, i) + c);
        }
    }
    Ok(Polynomial::new(coeffs))
}

/// All roots with multiplicity, conjugate pairs adjacent, deterministic order
/// (ascending real part, then ascending |imag|, positive imaginary first).
///
/// Residual contract: |p(root)| <= 1e-8 * |coeffs| for every returned root;
/// violations surface as an error rather than a silently wrong spectrum.
pub fn polynomial_roots(p: &Polynomial) -> Result<Vec<ComplexScalar>, LinalgError> {
    let deg = p.degree();
    if deg == 0 {
        return if p.coeffs.iter().all(|&c| c == 0.0) {
            Err(LinalgError::DimensionMismatch("zero polynomial has no defined roots".into()))
        } else {
            Ok(Vec::new())
        };
    }
    let coeffs = &p.coeffs[..=deg];
    let mut roots = match deg {
        1 => vec![ComplexScalar::new(-coeffs[0] / coeffs[1], 0.0)],
        2 => quadratic_roots(coeffs[0], coeffs[1], coeffs[2]),
        _ => aberth(coeffs),
    };
    let monic = monic_normalize(coeffs);
    snap_clusters(&mut roots, &monic);
    pair_conjugates(&mut roots);
    sort_roots(&mut roots);
    let tol = 1e-8 * p.norm();
    for &r in &roots {
        let residual = p.eval_complex(r).norm();
        if residual > tol {
            return Err(LinalgError::RootResidual { residual, tol });
        }
    }
    Ok(roots)
}

/// Eigenvalues as the roots of the characteristic polynomial.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<ComplexScalar>, LinalgError> {
    polynomial_roots(&characteristic_polynomial(a)?)
}

fn monic_normalize(coeffs: &[f64]) -> Polynomial {
    let lead = *coeffs.last().unwrap();
    Polynomial::new(coeffs.iter().map(|&c| c / lead).collect())
}

fn quadratic_roots(c0: f64, c1: f64, c2: f64) -> Vec<ComplexScalar> {
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        // Stable form: avoid cancellation in the smaller root.
        let q = -0.5 * (c1 + c1.signum() * sq);
        let (r1, r2) = if q == 0.0 {
            (0.0, 0.0)
        } else {
            (q / c2, c0 / q)
        };
        vec![ComplexScalar::new(r1, 0.0), ComplexScalar::new(r2, 0.0)]
    } else {
        let re = -c1 / (2.0 * c2);
        let im = (-disc).sqrt() / (2.0 * c2.abs());
        vec![ComplexScalar::new(re, im), ComplexScalar::new(re, -im)]
    }
}

/// Aberth-Ehrlich simultaneous iteration on the monic-normalized input.
/// Starting points are fixed (centroid plus a circle at an irrational phase),
/// so the whole computation is deterministic.
fn aberth(coeffs: &[f64]) -> Vec<ComplexScalar> {
    let n = coeffs.len() - 1;
    let monic = monic_normalize(coeffs);
    let deriv = monic.derivative();
    let centroid = -monic.coeffs[n - 1] / n as f64;
    let radius = 1.0 + monic.coeffs[..n].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut z: Vec<ComplexScalar> = (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            ComplexScalar::new(centroid, 0.0)
                + ComplexScalar::new(radius * theta.cos(), radius * theta.sin())
        })
        .collect();
    let mut settled = vec![false; n];
    for _iter in 0..400 {
        let mut moved = false;
        for k in 0..n {
            if settled[k] {
                continue;
            }
            let (val, bound) = monic.eval_with_bound(z[k]);
            if val.norm() <= 8.0 * EPS * bound {
                settled[k] = true;
                continue;
            }
            let der = deriv.eval_complex(z[k]);
            let w = if der.norm() == 0.0 {
                // Stationary point: nudge off it deterministically.
                let nudge = ComplexScalar::new(1e-8 * (1.0 + z[k].norm()), 1e-8);
                z[k] += nudge;
                continue;
            } else {
                val / der
            };
            let mut repulsion = ComplexScalar::new(0.0, 0.0);
            for j in 0..n {
                if j == k {
                    continue;
                }
                let d = z[k] - z[j];
                if d.norm() > 0.0 {
                    repulsion += ComplexScalar::new(1.0, 0.0) / d;
                }
            }
            let denom = ComplexScalar::new(1.0, 0.0) - w * repulsion;
            let corr = if denom.norm() < 1e-300 { w } else { w / denom };
            z[k] -= corr;
            if corr.norm() > 1e-15 * (1.0 + z[k].norm()) {
                moved = true;
            } else {
                settled[k] = true;
            }
        }
        if !moved && settled.iter().all(|&s| s) {
            break;
        }
    }
    z
}

/// Groups roots by distance and replaces every residual-indistinguishable
/// cluster with its centroid repeated. The centroid of an m-fold cluster
/// cancels the first-order scatter, recovering near machine accuracy where
/// the raw iterates only reach eps^(1/m). A merge is accepted only when the
/// centroid's residual sits at the evaluation noise floor, so genuinely
/// distinct nearby roots stay distinct.
fn snap_clusters(roots: &mut Vec<ComplexScalar>, monic: &Polynomial) {
    let scale = 1.0 + roots.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let groups = group_by_distance(roots, 2e-2 * scale);
    let mut out = Vec::with_capacity(roots.len());
    for g in groups {
        resolve_group(&g, monic, 2e-2 * scale, 0, &mut out);
    }
    *roots = out;
}

fn group_by_distance(points: &[ComplexScalar], tol: f64) -> Vec<Vec<ComplexScalar>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for i in 0..n {
        for j in i + 1..n {
            if (points[i] - points[j]).norm() <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut buckets: Vec<(usize, Vec<ComplexScalar>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match buckets.iter_mut().find(|(root, _)| *root == r) {
            Some((_, v)) => v.push(points[i]),
            None => buckets.push((r, vec![points[i]])),
        }
    }
    buckets.into_iter().map(|(_, v)| v).collect()
}

fn resolve_group(
    group: &[ComplexScalar],
    monic: &Polynomial,
    tol: f64,
    depth: usize,
    out: &mut Vec<ComplexScalar>,
) {
    if group.len() == 1 {
        out.push(group[0]);
        return;
    }
    let m = group.len();
    let centroid = group.iter().sum::<ComplexScalar>() / m as f64;
    let radius = group
        .iter()
        .map(|z| (z - centroid).norm())
        .fold(0.0f64, f64::max);
    let snapped = refine_multiple_root(monic, centroid, m, radius);
    let (val, bound) = monic.eval_with_bound(snapped);
    if val.norm() <= 256.0 * EPS * bound.max(1.0) {
        out.extend(std::iter::repeat(snapped).take(m));
        return;
    }
    if depth >= 6 {
        out.extend_from_slice(group);
        return;
    }
    let sub = group_by_distance(group, tol / 10.0);
    if sub.len() == 1 {
        out.extend_from_slice(group);
        return;
    }
    for g in sub {
        resolve_group(&g, monic, tol / 10.0, depth + 1, out);
    }
}

/// Refines the center of an m-fold cluster: a root of multiplicity m is a
/// simple root of the (m-1)-th derivative, where plain Newton reaches
/// machine accuracy instead of the eps^(1/m) floor of the original
/// polynomial. Falls back to the centroid if the iteration leaves the
/// cluster's neighborhood (which happens when the cluster is not actually
/// an m-fold root).
fn refine_multiple_root(
    monic: &Polynomial,
    centroid: ComplexScalar,
    m: usize,
    radius: f64,
) -> ComplexScalar {
    let mut q = monic.clone();
    for _ in 1..m {
        q = q.derivative();
    }
    let top = q.coeffs.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
    if top == 0.0 {
        return centroid;
    }
    let q = Polynomial::new(q.coeffs.iter().map(|&c| c / top).collect());
    let dq = q.derivative();
    let leash = 8.0 * radius + 1e-12 * (1.0 + centroid.norm());
    let mut z = centroid;
    for _ in 0..60 {
        let v = q.eval_complex(z);
        let d = dq.eval_complex(z);
        if d.norm() == 0.0 {
            break;
        }
        let step = v / d;
        z -= step;
        if (z - centroid).norm() > leash {
            return centroid;
        }
        if step.norm() <= 1e-16 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

/// Real coefficients force a conjugate-symmetric spectrum; enforce it
/// exactly. Near-real roots collapse onto the axis, the rest are matched
/// with a partner and symmetrized.
fn pair_conjugates(roots: &mut [ComplexScalar]) {
    let n = roots.len();
    let scale = 1.0 + roots.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    for z in roots.iter_mut() {
        if z.im.abs() <= 1e-9 * scale {
            z.im = 0.0;
        }
    }
    let mut used = vec![false; n];
    for i in 0..n {
        if used[i] || roots[i].im == 0.0 {
            continue;
        }
        used[i] = true;
        let target = roots[i].conj();
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if used[j] || roots[j].im == 0.0 || roots[j].im.signum() == roots[i].im.signum() {
                continue;
            }
            let d = (roots[j] - target).norm();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        if let Some((j, d)) = best {
            if d <= 1e-6 * scale {
                used[j] = true;
                let re = 0.5 * (roots[i].re + roots[j].re);
                let im = 0.5 * (roots[i].im.abs() + roots[j].im.abs());
                let sign_i = roots[i].im.signum();
                roots[i] = ComplexScalar::new(re, sign_i * im);
                roots[j] = ComplexScalar::new(re, -sign_i * im);
            }
        }
    }
}

fn sort_roots(roots: &mut [ComplexScalar]) {
    roots.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.abs().partial_cmp(&b.im.abs()).unwrap())
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn charpoly_known_values() {
        // diag(2, 1/2): p(x) = x^2 - 2.5 x + 1.
        let p = characteristic_polynomial(&Matrix::diag(&[2.0, 0.5])).unwrap();
        assert_eq!(p.coeffs, vec![1.0, -2.5, 1.0]);

        // Unipotent shear: p(x) = (x - 1)^2 exactly.
        let shear = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        let p = characteristic_polynomial(&shear).unwrap();
        assert_eq!(p.coeffs, vec![1.0, -2.0, 1.0]);
    }

    #[test]
    fn charpoly_rejects_large_matrices() {
        let a = Matrix::identity(13);
        assert!(matches!(
            characteristic_polynomial(&a),
            Err(LinalgError::UnsupportedSize { got: 13, max: 12 })
        ));
    }

    #[test]
    fn roots_of_expanded_quartic() {
        // Oracle: expand (x-1)^2 (x-4) (x-1/4) by direct multiplication and
        // recover exactly those roots.
        let p = Polynomial::from_real_roots(&[1.0, 1.0, 4.0, 0.25]);
        let roots = polynomial_roots(&p).unwrap();
        let expected = [0.25, 1.0, 1.0, 4.0];
        assert_eq!(roots.len(), 4);
        for (r, e) in roots.iter().zip(expected) {
            assert!((r.re - e).abs() <= 1e-9, "root {r} vs {e}");
            assert_eq!(r.im, 0.0);
        }
    }

    #[test]
    fn quadruple_root_snaps_to_full_accuracy() {
        // (x-1)^4: raw simultaneous iteration scatters at ~1e-4; the cluster
        // centroid must come back at 1e-9 or better.
        let p = Polynomial::from_real_roots(&[1.0; 4]);
        let roots = polynomial_roots(&p).unwrap();
        assert_eq!(roots.len(), 4);
        for r in roots {
            assert!((r.norm() - 1.0).abs() <= 1e-9, "|root| = {}", r.norm());
            assert!((r.re - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn conjugate_pairs_come_back_paired() {
        // (x^2 + 1)(x^2 - 2x + 5): roots i, -i, 1 + 2i, 1 - 2i.
        let p = Polynomial::new(vec![1.0, 0.0, 1.0]).mul(&Polynomial::new(vec![5.0, -2.0, 1.0]));
        let roots = polynomial_roots(&p).unwrap();
        assert_eq!(roots.len(), 4);
        // Adjacent pairing with positive imaginary part first.
        for pair in roots.chunks(2) {
            assert!((pair[0].conj() - pair[1]).norm() <= 1e-12);
            assert!(pair[0].im > 0.0);
        }
    }

    #[test]
    fn close_but_distinct_roots_are_not_merged() {
        let p = Polynomial::from_real_roots(&[1.0, 1.001, 3.0]);
        let roots = polynomial_roots(&p).unwrap();
        let mut res: Vec<f64> = roots.iter().map(|r| r.re).collect();
        res.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((res[0] - 1.0).abs() <= 1e-6);
        assert!((res[1] - 1.001).abs() <= 1e-6);
        assert!(res[1] - res[0] > 5e-4, "distinct roots collapsed");
    }

    #[test]
    fn degenerate_inputs() {
        assert!(polynomial_roots(&Polynomial::new(vec![0.0])).is_err());
        assert!(polynomial_roots(&Polynomial::new(vec![3.0])).unwrap().is_empty());
        let lin = polynomial_roots(&Polynomial::new(vec![-6.0, 2.0])).unwrap();
        assert_eq!(lin, vec![ComplexScalar::new(3.0, 0.0)]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        // Cayley-Hamilton: p(A) = 0 within 1e-8 * |A|^n.
        #[test]
        fn cayley_hamilton(data in prop::collection::vec(-2.0f64..2.0, 9)) {
            let a = Matrix::from_vec(3, 3, data);
            let p = characteristic_polynomial(&a).unwrap();
            let mut acc = Matrix::zeros(3, 3);
            let mut power = Matrix::identity(3);
            for &c in &p.coeffs {
                acc = acc.add(&power.scale(c));
                power = power.matmul(&a);
            }
            let bound = 1e-8 * a.frobenius_norm().max(1.0).powi(3);
            prop_assert!(acc.max_abs() <= bound);
        }

        // Root sum and product against trace and determinant on symmetric
        // matrices (real spectrum, no conjugate bookkeeping needed).
        #[test]
        fn roots_match_trace_and_det(d in prop::collection::vec(-2.0f64..2.0, 6)) {
            let a = Matrix::from_rows(&[
                vec![d[0], d[1], d[2]],
                vec![d[1], d[3], d[4]],
                vec![d[2], d[4], d[5]],
            ]);
            let roots = eigenvalues(&a).unwrap();
            let sum: f64 = roots.iter().map(|r| r.re).sum();
            let prod = roots.iter().product::<ComplexScalar>();
            prop_assert!((sum - a.trace()).abs() <= 1e-8 * a.trace().abs().max(1.0));
            prop_assert!((prod.re - a.determinant()).abs() <= 1e-8 * a.determinant().abs().max(1.0));
            prop_assert!(prod.im.abs() <= 1e-8);
        }

        // Residual contract on random cubics through quintics.
        #[test]
        fn residual_contract(coeffs in prop::collection::vec(-3.0f64..3.0, 4..=6)) {
            prop_assume!(coeffs.last().unwrap().abs() > 0.1);
            let p = Polynomial::new(coeffs);
            if let Ok(roots) = polynomial_roots(&p) {
                let tol = 1e-8 * p.norm();
                for r in roots {
                    prop_assert!(p.eval_complex(r).norm() <= tol);
                }
            }
        }
    }
}
