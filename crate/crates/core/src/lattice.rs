//! Lattice-level arithmetic: Gram matrices, norms, duals, shortest vectors,
//! and the semi-stability test.
//!
//! A lattice of rank n is represented by its Gram matrix H = (h_ab), the
//! positive definite symmetric matrix of pairwise inner products of a basis.
//! The squared length of the integer vector m is the quadratic form value
//! m^T H m, and the dual lattice has Gram matrix H^{-1}.  Rank-2 lattices of
//! covolume 1 are parametrized by a point tau = x + iy of the upper half
//! plane: the Gram matrix is (1/y)[[x^2+y^2, x], [x, 1]] and the form value
//! at (m, n) is |m tau + n|^2 / y.

use crate::error::Error;
use crate::Result;

/// Candidate cap for [`shortest_vectors`] box enumeration.
const ENUM_CAP: u64 = 1_000_000;

/// Positive definite symmetric Gram matrix of a lattice basis.
///
/// Rank 1 and 2 are the supported cases; the storage is general n x n
/// row-major so the data model does not bake the restriction in.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    h: Vec<f64>,
}

impl GramMatrix {
    /// Rank-1 Gram matrix `[h]` with `h > 0`.
    pub fn rank1(h: f64) -> Result<Self> {
        Self::from_entries(1, vec![h])
    }

    /// Rank-2 Gram matrix `[[h11, h12], [h12, h22]]`.
    pub fn rank2(h11: f64, h12: f64, h22: f64) -> Result<Self> {
        Self::from_entries(2, vec![h11, h12, h12, h22])
    }

    /// General constructor from row-major entries; validates shape,
    /// symmetry, and positive definiteness.
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::domain(format!(
                "Gram matrix needs n*n entries, got n = {n}, len = {}",
                entries.len()
            )));
        }
        if !entries.iter().all(|v| v.is_finite()) {
            return Err(Error::domain("Gram entries must be finite"));
        }
        let scale = entries.iter().fold(0.0_f64, |a, &v| a.max(v.abs())).max(1.0);
        for a in 0..n {
            for b in (a + 1)..n {
                if (entries[a * n + b] - entries[b * n + a]).abs() > 1e-12 * scale {
                    return Err(Error::domain(format!(
                        "Gram matrix not symmetric at ({a},{b})"
                    )));
                }
            }
        }
        let g = GramMatrix { n, h: entries };
        if !g.is_positive_definite() {
            return Err(Error::domain("Gram matrix not positive definite"));
        }
        Ok(g)
    }

    /// Lattice rank.
    pub fn rank(&self) -> usize {
        self.n
    }

    /// Entry h_ab.
    pub fn entry(&self, a: usize, b: usize) -> f64 {
        self.h[a * self.n + b]
    }

    /// Determinant (ranks 1 and 2 closed-form).
    pub fn det(&self) -> f64 {
        match self.n {
            1 => self.h[0],
            2 => self.h[0] * self.h[3] - self.h[1] * self.h[2],
            _ => unreachable!("ranks above 2 are rejected at construction"),
        }
    }

    /// Covolume of the lattice, sqrt(det H).
    pub fn covolume(&self) -> f64 {
        self.det().sqrt()
    }

    /// Smallest eigenvalue, a lower bound of the form on unit vectors.
    pub fn min_eigenvalue(&self) -> f64 {
        match self.n {
            1 => self.h[0],
            2 => {
                let tr = self.h[0] + self.h[3];
                let disc = (tr * tr - 4.0 * self.det()).max(0.0).sqrt();
                // det / lambda_max avoids cancellation when the spread is
                // large.
                self.det() / (0.5 * (tr + disc))
            }
            _ => unreachable!("ranks above 2 are rejected at construction"),
        }
    }

    fn is_positive_definite(&self) -> bool {
        match self.n {
            1 => self.h[0] > 0.0,
            2 => self.h[0] > 0.0 && self.det() > 0.0,
            // Leading principal minors would generalize; ranks above 2 are
            // out of scope and rejected here.
            _ => false,
        }
    }
}

/// Upper-half-plane parameter tau = x + iy of a rank-2 covolume-1 lattice.
///
/// Plain data; use the membership predicates to test whether the point lies
/// in the reduced domains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rank2Tau {
    pub x: f64,
    pub y: f64,
}

impl Rank2Tau {
    pub fn new(x: f64, y: f64) -> Self {
        Rank2Tau { x, y }
    }

    /// Membership in the reduced domain D: |tau| >= 1 and -1/2 <= x < 1/2,
    /// with the arc boundary |tau| = 1 kept only for x <= 0 so each lattice
    /// class has a unique representative.  The arc test carries a 1e-12
    /// round-off band; the boundary has measure zero, so downstream
    /// quadrature is insensitive to the convention.
    pub fn contains_d(&self) -> bool {
        let r2 = self.x * self.x + self.y * self.y;
        if self.y <= 0.0 || !(-0.5..0.5).contains(&self.x) || r2 < 1.0 - 1e-12 {
            return false;
        }
        if (r2 - 1.0).abs() <= 1e-12 && self.x > 0.0 {
            return false;
        }
        true
    }

    /// Membership in D1, the semi-stable part of D: additionally y <= 1.
    pub fn contains_d1(&self) -> bool {
        self.contains_d() && self.y <= 1.0
    }
}

/// Gram matrix of the covolume-1 lattice with parameter tau.
///
/// Returns (1/y)[[x^2+y^2, x], [x, 1]], which has determinant 1 identically.
pub fn gram_from_tau(tau: &Rank2Tau) -> Result<GramMatrix> {
    if !(tau.y > 0.0) {
        return Err(Error::domain(format!(
            "tau must lie in the upper half plane, got y = {}",
            tau.y
        )));
    }
    let (x, y) = (tau.x, tau.y);
    GramMatrix::rank2((x * x + y * y) / y, x / y, 1.0 / y)
}

/// Gram matrix of the dual lattice, H^{-1}.
pub fn dual_gram(h: &GramMatrix) -> Result<GramMatrix> {
    match h.rank() {
        1 => {
            let v = h.entry(0, 0);
            if v.abs() < f64::MIN_POSITIVE {
                return Err(Error::numeric("singular Gram matrix"));
            }
            GramMatrix::rank1(1.0 / v)
        }
        2 => {
            let d = h.det();
            if d.abs() < 1e-300 {
                return Err(Error::numeric("singular Gram matrix"));
            }
            GramMatrix::rank2(h.entry(1, 1) / d, -h.entry(0, 1) / d, h.entry(0, 0) / d)
        }
        _ => unreachable!("ranks above 2 are rejected at construction"),
    }
}

/// Quadratic form value m^T H m of the integer vector `lambda`.
///
/// Panics if the vector length disagrees with the rank; callers always hold
/// vectors produced for the same lattice.
pub fn norm_sq(h: &GramMatrix, lambda: &[i64]) -> f64 {
    assert_eq!(lambda.len(), h.rank(), "vector length must equal the rank");
    let mut total = 0.0;
    for a in 0..h.rank() {
        for b in 0..h.rank() {
            total += h.entry(a, b) * (lambda[a] as f64) * (lambda[b] as f64);
        }
    }
    total
}

/// All nonzero lattice vectors with form value at most `bound`, sorted by
/// (value, coordinates).
///
/// Enumeration runs over the integer box |m_a| <= sqrt(bound * (H^{-1})_aa),
/// which contains the ellipsoid, so no vector is missed.  Boxes above
/// 10^6 candidates are refused with a resource error.
pub fn shortest_vectors(h: &GramMatrix, bound: f64) -> Result<Vec<(Vec<i64>, f64)>> {
    if !(bound > 0.0) {
        return Err(Error::domain(format!("bound must be positive, got {bound}")));
    }
    let hinv = dual_gram(h)?;
    let half_widths: Vec<i64> = (0..h.rank())
        .map(|a| (bound * hinv.entry(a, a)).sqrt().floor() as i64)
        .collect();
    let mut candidates: u64 = 1;
    for &k in &half_widths {
        candidates = candidates.saturating_mul(2 * k as u64 + 1);
    }
    if candidates > ENUM_CAP {
        return Err(Error::resource(format!(
            "shortest-vector enumeration over {candidates} candidates exceeds the cap of {ENUM_CAP}"
        )));
    }
    let mut out = Vec::new();
    match h.rank() {
        1 => {
            for m in -half_widths[0]..=half_widths[0] {
                if m == 0 {
                    continue;
                }
                let v = norm_sq(h, &[m]);
                if v <= bound {
                    out.push((vec![m], v));
                }
            }
        }
        2 => {
            for m in -half_widths[0]..=half_widths[0] {
                for n in -half_widths[1]..=half_widths[1] {
                    if m == 0 && n == 0 {
                        continue;
                    }
                    let v = norm_sq(h, &[m, n]);
                    if v <= bound {
                        out.push((vec![m, n], v));
                    }
                }
            }
        }
        _ => unreachable!("ranks above 2 are rejected at construction"),
    }
    out.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .expect("form values are finite")
            .then_with(|| a.0.cmp(&b.0))
    });
    Ok(out)
}

/// Squared length of a shortest nonzero vector.
///
/// A diagonal entry h_aa is the form value of a basis vector, so the
/// enumeration bound min_a h_aa always captures the minimum.
pub fn minimal_norm(h: &GramMatrix) -> Result<f64> {
    let diag_min = (0..h.rank())
        .map(|a| h.entry(a, a))
        .fold(f64::INFINITY, f64::min);
    let found = shortest_vectors(h, diag_min * (1.0 + 1e-12))?;
    Ok(found
        .first()
        .map(|(_, v)| *v)
        .expect("a basis vector satisfies the bound"))
}

/// Semi-stability of the lattice.
///
/// Rank 1 is always semi-stable.  For rank 2 the defining condition over all
/// proper sublattices reduces to the rank-1 case (finite-index rank-2
/// sublattices only increase the covolume), and over rank-1 sublattices the
/// binding one is generated by a shortest vector, so the test is
/// min |lambda|^2 >= covol(Lambda).
pub fn is_semistable(h: &GramMatrix) -> Result<bool> {
    match h.rank() {
        1 => Ok(true),
        2 => {
            let vol = h.covolume();
            // Any vector of form value <= vol certifies the minimum; the
            // bound is slightly enlarged so boundary lattices enumerate
            // their minimal vectors despite round-off.
            let found = shortest_vectors(h, vol * (1.0 + 1e-9))?;
            let min = found.first().map(|(_, v)| *v);
            Ok(match min {
                Some(v) => v >= vol * (1.0 - 1e-12),
                None => true,
            })
        }
        _ => Err(Error::domain("semi-stability implemented for ranks 1 and 2 only")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const SQRT3: f64 = 1.732_050_807_568_877_3;

    fn hex_tau() -> Rank2Tau {
        Rank2Tau::new(-0.5, SQRT3 / 2.0)
    }

    #[test]
    fn gram_at_i_is_identity() {
        let h = gram_from_tau(&Rank2Tau::new(0.0, 1.0)).unwrap();
        assert_eq!(
            (h.entry(0, 0), h.entry(0, 1), h.entry(1, 1)),
            (1.0, 0.0, 1.0)
        );
    }

    #[test]
    fn gram_at_hexagonal_point() {
        let h = gram_from_tau(&hex_tau()).unwrap();
        let c = 2.0 / SQRT3;
        assert_relative_eq!(h.entry(0, 0), c, max_relative = 1e-15);
        assert_relative_eq!(h.entry(0, 1), -c / 2.0, max_relative = 1e-15);
        assert_relative_eq!(h.entry(1, 1), c, max_relative = 1e-15);
    }

    #[test]
    fn gram_rejects_lower_half_plane() {
        assert!(gram_from_tau(&Rank2Tau::new(0.3, -1.0)).is_err());
        assert!(gram_from_tau(&Rank2Tau::new(0.3, 0.0)).is_err());
    }

    #[test]
    fn dual_of_identity_is_identity() {
        let h = GramMatrix::rank2(1.0, 0.0, 1.0).unwrap();
        assert_eq!(dual_gram(&h).unwrap(), h);
    }

    #[test]
    fn dual_of_hexagonal_gram() {
        let d = dual_gram(&gram_from_tau(&hex_tau()).unwrap()).unwrap();
        let c = 2.0 / SQRT3;
        assert_relative_eq!(d.entry(0, 0), c, max_relative = 1e-14);
        assert_relative_eq!(d.entry(0, 1), c / 2.0, max_relative = 1e-14);
        assert_relative_eq!(d.entry(1, 1), c, max_relative = 1e-14);
    }

    #[test]
    fn norm_examples() {
        let id = GramMatrix::rank2(1.0, 0.0, 1.0).unwrap();
        assert_eq!(norm_sq(&id, &[3, 4]), 25.0);
        let hi = gram_from_tau(&Rank2Tau::new(0.0, 1.0)).unwrap();
        assert_eq!(norm_sq(&hi, &[1, 1]), 2.0);
        let hh = gram_from_tau(&hex_tau()).unwrap();
        assert_relative_eq!(norm_sq(&hh, &[1, 0]), 2.0 / SQRT3, max_relative = 1e-15);
    }

    #[test]
    fn shortest_vectors_square_lattice() {
        let id = GramMatrix::rank2(1.0, 0.0, 1.0).unwrap();
        let found = shortest_vectors(&id, 1.0).unwrap();
        let coords: Vec<Vec<i64>> = found.iter().map(|(v, _)| v.clone()).collect();
        assert_eq!(
            coords,
            vec![vec![-1, 0], vec![0, -1], vec![0, 1], vec![1, 0]]
        );
        assert!(found.iter().all(|(_, v)| *v == 1.0));

        let hi = gram_from_tau(&Rank2Tau::new(0.0, 1.0)).unwrap();
        assert_eq!(shortest_vectors(&hi, 1.5).unwrap().len(), 4);
    }

    #[test]
    fn shortest_vectors_hexagonal_lattice() {
        let hh = gram_from_tau(&hex_tau()).unwrap();
        let found = shortest_vectors(&hh, 1.2).unwrap();
        assert_eq!(found.len(), 6);
        for (_, v) in &found {
            assert_relative_eq!(*v, 2.0 / SQRT3, max_relative = 1e-14);
        }
    }

    #[test]
    fn shortest_vectors_respects_cap() {
        let h = GramMatrix::rank2(1.0, 0.0, 1.0).unwrap();
        let err = shortest_vectors(&h, 1e9).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }

    #[test]
    fn semistability_examples() {
        assert!(is_semistable(&GramMatrix::rank1(0.37).unwrap()).unwrap());
        let hi = gram_from_tau(&Rank2Tau::new(0.0, 1.0)).unwrap();
        assert!(is_semistable(&hi).unwrap());
        let hh = gram_from_tau(&hex_tau()).unwrap();
        assert!(is_semistable(&hh).unwrap());
        let tall = gram_from_tau(&Rank2Tau::new(0.0, 1.5)).unwrap();
        assert!(!is_semistable(&tall).unwrap());
    }

    #[test]
    fn membership_boundary_convention() {
        assert!(Rank2Tau::new(0.0, 1.0).contains_d1());
        assert!(Rank2Tau::new(-0.5, SQRT3 / 2.0).contains_d());
        // The arc point at x = +1/2 is the SL2(Z)-translate of the one at
        // x = -1/2 and is excluded.
        assert!(!Rank2Tau::new(0.5, SQRT3 / 2.0).contains_d());
        assert!(!Rank2Tau::new(0.0, 1.2).contains_d1());
        assert!(Rank2Tau::new(0.0, 1.2).contains_d());
        assert!(!Rank2Tau::new(0.3, 0.5).contains_d());
    }

    /// Independent semi-stability check: enumerate vectors in a plain
    /// coordinate box and compare the minimal form value to the covolume.
    fn semistable_brute(h: &GramMatrix) -> bool {
        let mut min = f64::INFINITY;
        for m in -6_i64..=6 {
            for n in -6_i64..=6 {
                if m == 0 && n == 0 {
                    continue;
                }
                min = min.min(norm_sq(h, &[m, n]));
            }
        }
        min >= h.covolume() * (1.0 - 1e-12)
    }

    fn tau_in_d() -> impl Strategy<Value = Rank2Tau> {
        (-0.5_f64..0.5, 0.0_f64..1.0).prop_map(|(x, t)| {
            let y_lo = (1.0 - x * x).sqrt();
            // Sweep from the arc up to y = 2 so both the semi-stable band
            // and its complement are exercised.
            Rank2Tau::new(x, y_lo + t * (2.0 - y_lo))
        })
    }

    proptest! {
        #[test]
        fn semistable_iff_y_at_most_one(tau in tau_in_d()) {
            prop_assume!(tau.contains_d());
            prop_assume!((tau.y - 1.0).abs() > 1e-9);
            let h = gram_from_tau(&tau).unwrap();
            let closed = tau.y <= 1.0;
            prop_assert_eq!(is_semistable(&h).unwrap(), closed);
            prop_assert_eq!(semistable_brute(&h), closed);
        }

        #[test]
        fn covolume_is_one_on_tau_lattices(tau in tau_in_d()) {
            let h = gram_from_tau(&tau).unwrap();
            prop_assert!((h.covolume() - 1.0).abs() < 1e-14);
        }

        #[test]
        fn norm_is_positive_and_even(tau in tau_in_d(), m in -20_i64..20, n in -20_i64..20) {
            prop_assume!(m != 0 || n != 0);
            let h = gram_from_tau(&tau).unwrap();
            let v = norm_sq(&h, &[m, n]);
            prop_assert!(v > 0.0);
            prop_assert_eq!(v, norm_sq(&h, &[-m, -n]));
        }

        #[test]
        fn dual_is_an_involution(a in 0.2_f64..5.0, b in -1.0_f64..1.0, c in 0.2_f64..5.0) {
            prop_assume!(a * c - b * b > 0.01);
            let h = GramMatrix::rank2(a, b, c).unwrap();
            let hh = dual_gram(&dual_gram(&h).unwrap()).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((h.entry(i, j) - hh.entry(i, j)).abs() < 1e-13);
                }
            }
        }

        #[test]
        fn dual_preserves_shortest_multiset_on_d1(x in -0.5_f64..0.0, t in 0.0_f64..1.0) {
            let y_lo = (1.0 - x * x).sqrt();
            let tau = Rank2Tau::new(x, y_lo + t * (1.0 - y_lo));
            prop_assume!(tau.contains_d1());
            let h = gram_from_tau(&tau).unwrap();
            let d = dual_gram(&h).unwrap();
            let mut a: Vec<f64> = shortest_vectors(&h, 4.0).unwrap().iter().map(|(_, v)| *v).collect();
            let mut b: Vec<f64> = shortest_vectors(&d, 4.0).unwrap().iter().map(|(_, v)| *v).collect();
            a.sort_by(|p, q| p.partial_cmp(q).unwrap());
            b.sort_by(|p, q| p.partial_cmp(q).unwrap());
            prop_assert_eq!(a.len(), b.len());
            for (p, q) in a.iter().zip(&b) {
                prop_assert!((p - q).abs() < 1e-10 * (1.0 + p.abs()));
            }
        }
    }
}
