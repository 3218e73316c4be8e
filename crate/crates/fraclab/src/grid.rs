//! Meshes for interval and rectangle domains with homogeneous Dirichlet
//! boundaries: node coordinates, element connectivity, boundary flags and the
//! interior degree-of-freedom numbering used by all assembled matrices.

use crate::error::{Error, Result};
use std::fmt::Write as _;

/// Piecewise-linear mesh of an interval (segments) or rectangle (triangles).
#[derive(Debug, Clone)]
pub struct Grid {
    dimension: usize,
    coords: Vec<[f64; 2]>,
    elements: Vec<Vec<usize>>,
    boundary: Vec<bool>,
    interior_index: Vec<Option<usize>>,
    interior_nodes: Vec<usize>,
}

/// Constant P1 geometry of one element: measure, centroid and basis gradients.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub nodes: Vec<usize>,
    pub measure: f64,
    pub centroid: [f64; 2],
    /// gradients[local_node][axis]
    pub gradients: Vec<[f64; 2]>,
}

impl Grid {
    fn finalize(
        dimension: usize,
        coords: Vec<[f64; 2]>,
        elements: Vec<Vec<usize>>,
        boundary: Vec<bool>,
    ) -> Result<Self> {
        let mut interior_index = vec![None; coords.len()];
        let mut interior_nodes = Vec::new();
        for (i, &b) in boundary.iter().enumerate() {
            if !b {
                interior_index[i] = Some(interior_nodes.len());
                interior_nodes.push(i);
            }
        }
        let grid = Self {
            dimension,
            coords,
            elements,
            boundary,
            interior_index,
            interior_nodes,
        };
        for e in 0..grid.n_elements() {
            let geo = grid.element_geometry(e);
            if !(geo.measure > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "element {e} has non-positive measure {}",
                    geo.measure
                )));
            }
        }
        Ok(grid)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_interior(&self) -> usize {
        self.interior_nodes.len()
    }

    pub fn coords(&self, node: usize) -> [f64; 2] {
        self.coords[node]
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    /// Interior dof index of a node, if it is interior.
    pub fn interior_index(&self, node: usize) -> Option<usize> {
        self.interior_index[node]
    }

    /// Global node id of interior dof `k`.
    pub fn interior_node(&self, k: usize) -> usize {
        self.interior_nodes[k]
    }

    pub fn element_nodes(&self, e: usize) -> &[usize] {
        &self.elements[e]
    }

    pub fn element_geometry(&self, e: usize) -> ElementGeometry {
        let nodes = self.elements[e].clone();
        match self.dimension {
            1 => {
                let a = self.coords[nodes[0]][0];
                let b = self.coords[nodes[1]][0];
                let h = b - a;
                ElementGeometry {
                    nodes,
                    measure: h,
                    centroid: [0.5 * (a + b), 0.0],
                    gradients: vec![[-1.0 / h, 0.0], [1.0 / h, 0.0]],
                }
            }
            2 => {
                let p = [
                    self.coords[nodes[0]],
                    self.coords[nodes[1]],
                    self.coords[nodes[2]],
                ];
                let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                    - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
                let area = 0.5 * det;
                // grad N_i = perpendicular of opposite edge / (2 area)
                let grads = vec![
                    [(p[1][1] - p[2][1]) / det, (p[2][0] - p[1][0]) / det],
                    [(p[2][1] - p[0][1]) / det, (p[0][0] - p[2][0]) / det],
                    [(p[0][1] - p[1][1]) / det, (p[1][0] - p[0][0]) / det],
                ];
                ElementGeometry {
                    nodes,
                    measure: area,
                    centroid: [
                        (p[0][0] + p[1][0] + p[2][0]) / 3.0,
                        (p[0][1] + p[1][1] + p[2][1]) / 3.0,
                    ],
                    gradients: grads,
                }
            }
            _ => unreachable!("grids are 1D or 2D"),
        }
    }

    /// Unique node-pair edges of the mesh, each sorted, list sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for el in &self.elements {
            match el.len() {
                2 => edges.push(order(el[0], el[1])),
                3 => {
                    edges.push(order(el[0], el[1]));
                    edges.push(order(el[1], el[2]));
                    edges.push(order(el[0], el[2]));
                }
                _ => {}
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Node table in CSV coordinate format: `id,x[,y],boundary`.
    pub fn node_table_csv(&self) -> String {
        let mut out = String::new();
        if self.dimension == 1 {
            out.push_str("id,x,boundary\n");
        } else {
            out.push_str("id,x,y,boundary\n");
        }
        for (i, c) in self.coords.iter().enumerate() {
            let b = u8::from(self.boundary[i]);
            if self.dimension == 1 {
                let _ = writeln!(out, "{i},{},{b}", c[0]);
            } else {
                let _ = writeln!(out, "{i},{},{},{b}", c[0], c[1]);
            }
        }
        out
    }
}

fn order(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Equispaced interval mesh on [a, b] with n segments; endpoints are boundary.
pub fn build_interval_grid(a: f64, b: f64, n: usize) -> Result<Grid> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "interval bounds must be finite, got [{a}, {b}]"
        )));
    }
    if !(b > a) {
        return Err(Error::InvalidArgument(format!(
            "interval requires b > a, got [{a}, {b}]"
        )));
    }
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "interval grid needs n >= 3 segments, got {n}"
        )));
    }
    let h = (b - a) / n as f64;
    let coords: Vec<[f64; 2]> = (0..=n).map(|i| [a + i as f64 * h, 0.0]).collect();
    let elements: Vec<Vec<usize>> = (0..n).map(|i| vec![i, i + 1]).collect();
    let mut boundary = vec![false; n + 1];
    boundary[0] = true;
    boundary[n] = true;
    Grid::finalize(1, coords, elements, boundary)
}

/// Tensor-product rectangle mesh with each cell split into two triangles;
/// all edge nodes are boundary.
pub fn build_rectangle_grid(
    ax: f64,
    bx: f64,
    ay: f64,
    by: f64,
    nx: usize,
    ny: usize,
) -> Result<Grid> {
    for v in [ax, bx, ay, by] {
        if !v.is_finite() {
            return Err(Error::InvalidArgument("rectangle bounds must be finite".into()));
        }
    }
    if !(bx > ax) || !(by > ay) {
        return Err(Error::InvalidArgument(format!(
            "rectangle requires bx > ax and by > ay, got x [{ax}, {bx}] y [{ay}, {by}]"
        )));
    }
    if nx < 3 || ny < 3 {
        return Err(Error::InvalidArgument(format!(
            "rectangle grid needs nx, ny >= 3, got {nx} x {ny}"
        )));
    }
    let hx = (bx - ax) / nx as f64;
    let hy = (by - ay) / ny as f64;
    let id = |ix: usize, iy: usize| iy * (nx + 1) + ix;
    let mut coords = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut boundary = Vec::with_capacity((nx + 1) * (ny + 1));
    for iy in 0..=ny {
        for ix in 0..=nx {
            coords.push([ax + ix as f64 * hx, ay + iy as f64 * hy]);
            boundary.push(ix == 0 || ix == nx || iy == 0 || iy == ny);
        }
    }
    let mut elements = Vec::with_capacity(2 * nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let (p00, p10) = (id(ix, iy), id(ix + 1, iy));
            let (p01, p11) = (id(ix, iy + 1), id(ix + 1, iy + 1));
            elements.push(vec![p00, p10, p11]);
            elements.push(vec![p00, p11, p01]);
        }
    }
    Grid::finalize(2, coords, elements, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn interval_equispacing() {
        let g = build_interval_grid(0.0, PI, 4).unwrap();
        assert_eq!(g.n_nodes(), 5);
        for (i, expected) in [0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0, PI]
            .iter()
            .enumerate()
        {
            assert_relative_eq!(g.coords(i)[0], expected, epsilon = 1e-15);
        }
        assert!(g.is_boundary(0) && g.is_boundary(4));
        assert_eq!(g.n_interior(), 3);
    }

    #[test]
    fn interval_counts() {
        let g = build_interval_grid(0.0, 1.0, 3).unwrap();
        assert_eq!(g.n_nodes(), 4);
        assert_eq!(g.n_interior(), 2);
        assert_eq!(g.n_elements(), 3);
    }

    #[test]
    fn interval_validation() {
        assert!(build_interval_grid(1.0, 0.0, 10).is_err());
        assert!(build_interval_grid(0.0, 1.0, 2).is_err());
        assert!(build_interval_grid(f64::NAN, 1.0, 5).is_err());
    }

    #[test]
    fn rectangle_counts() {
        let g = build_rectangle_grid(0.0, 1.0, 0.0, 1.0, 3, 3).unwrap();
        assert_eq!(g.n_nodes(), 16);
        assert_eq!(g.n_interior(), 4);
        assert_eq!(g.n_elements(), 18);

        let g = build_rectangle_grid(0.0, 2.0, 0.0, 1.0, 4, 3).unwrap();
        assert_eq!(g.n_nodes(), 20);
        assert_eq!(g.n_interior(), 6);
    }

    #[test]
    fn rectangle_validation() {
        assert!(build_rectangle_grid(0.0, 1.0, 1.0, 1.0, 3, 3).is_err());
        assert!(build_rectangle_grid(0.0, 1.0, 0.0, 1.0, 2, 3).is_err());
    }

    #[test]
    fn interior_map_is_bijection() {
        let g = build_rectangle_grid(0.0, 1.0, 0.0, 2.0, 4, 5).unwrap();
        for k in 0..g.n_interior() {
            let node = g.interior_node(k);
            assert_eq!(g.interior_index(node), Some(k));
            assert!(!g.is_boundary(node));
        }
        let flagged = (0..g.n_nodes()).filter(|&i| g.is_boundary(i)).count();
        assert_eq!(flagged + g.n_interior(), g.n_nodes());
    }

    #[test]
    fn triangle_measures_sum_to_area() {
        let g = build_rectangle_grid(0.0, 2.0, 0.0, 1.0, 4, 3).unwrap();
        let total: f64 = (0..g.n_elements())
            .map(|e| g.element_geometry(e).measure)
            .sum();
        assert_relative_eq!(total, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn p1_gradients_reproduce_linear_functions() {
        let g = build_rectangle_grid(0.0, 1.0, 0.0, 1.0, 3, 3).unwrap();
        // f(x, y) = 2x + 3y has constant gradient (2, 3) on every element.
        for e in 0..g.n_elements() {
            let geo = g.element_geometry(e);
            let mut grad = [0.0, 0.0];
            for (local, &node) in geo.nodes.iter().enumerate() {
                let [x, y] = g.coords(node);
                let f = 2.0 * x + 3.0 * y;
                grad[0] += f * geo.gradients[local][0];
                grad[1] += f * geo.gradients[local][1];
            }
            assert_relative_eq!(grad[0], 2.0, epsilon = 1e-12);
            assert_relative_eq!(grad[1], 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn csv_export_shape() {
        let g = build_interval_grid(0.0, 1.0, 3).unwrap();
        let csv = g.node_table_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("id,x,boundary"));
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().last().unwrap().ends_with(",1"));
    }
}
