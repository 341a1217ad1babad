use crate::complex::Simplex;

use super::Point;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Vertex coordinates of the regular `m`-simplex with edge length
/// sqrt(2), centered at the origin of `R^m`.
///
/// Built by projecting the offsets `e_i - (1,...,1)/(m+1)` of the
/// standard basis simplex onto an orthonormal basis of the sum-zero
/// hyperplane.
pub fn centered_simplex_vertices(m: usize) -> Vec<Vec<f64>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let n = m + 1;
    // Gram-Schmidt over the differences e_i - e_{i+1}, which span the
    // sum-zero hyperplane of R^n.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v[i + 1] = -1.0;
        for q in &basis {
            let c = dot(&v, q);
            for (vk, qk) in v.iter_mut().zip(q) {
                *vk -= c * qk;
            }
        }
        let len = norm(&v);
        for vk in v.iter_mut() {
            *vk /= len;
        }
        basis.push(v);
    }
    (0..n)
        .map(|i| {
            let mut w = vec![-1.0 / n as f64; n];
            w[i] += 1.0;
            basis.iter().map(|q| dot(&w, q)).collect()
        })
        .collect()
}

/// The chart in which an elementary simplicial collapse of an
/// `n`-simplex is evaluated: the free facet is the regular
/// `(n-1)`-simplex in the horizontal hyperplane with its barycenter at
/// the origin, and the remaining vertex sits at height
/// sqrt((n+1)/n) above it. Returns the facet vertices followed by that
/// apex, all in `R^n`.
pub fn collapse_chart_vertices(n: usize) -> Vec<Vec<f64>> {
    assert!(n >= 1, "a collapse needs a simplex of dimension >= 1");
    let mut verts: Vec<Vec<f64>> = centered_simplex_vertices(n - 1)
        .into_iter()
        .map(|mut v| {
            v.push(0.0);
            v
        })
        .collect();
    let mut apex = vec![0.0; n];
    apex[n - 1] = ((n as f64 + 1.0) / n as f64).sqrt();
    verts.push(apex);
    verts
}

/// Distance between two simplicial points in the sqrt(2)-edge chart of
/// a simplex containing both carriers: the Euclidean norm of the
/// barycentric difference over the merged vertex set. `None` when either
/// point is not simplicial. The caller is responsible for the carriers
/// actually sharing a simplex.
pub(crate) fn simplicial_chart_dist(a: &Point, b: &Point) -> Option<f64> {
    let (ca, xa, cb, xb) = match (a, b) {
        (
            Point::Simplicial {
                carrier: ca,
                coords: xa,
            },
            Point::Simplicial {
                carrier: cb,
                coords: xb,
            },
        ) => (ca, xa, cb, xb),
        _ => return None,
    };
    let weight = |carrier: &Simplex, coords: &[f64], v: u32| -> f64 {
        carrier
            .vertices()
            .iter()
            .position(|w| *w == v)
            .map_or(0.0, |i| coords[i])
    };
    let union = Simplex::new(
        ca.vertices()
            .iter()
            .chain(cb.vertices())
            .copied()
            .collect::<std::collections::BTreeSet<u32>>(),
    )
    .expect("union of carriers is nonempty");
    let sq: f64 = union
        .vertices()
        .iter()
        .map(|v| {
            let d = weight(ca, xa, *v) - weight(cb, xb, *v);
            d * d
        })
        .sum();
    Some(sq.sqrt())
}
