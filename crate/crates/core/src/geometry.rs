//! Triangulations of straight-edged polygonal domains.
//!
//! A [`Mesh`] stores nodes, counterclockwise triangles and the oriented
//! boundary edges (interior on the left, so outer loops run counterclockwise).
//! Boundary edges are derived from triangle adjacency: an edge used by exactly
//! one triangle lies on the boundary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Built-in polygonal domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    /// `[0,1]²`.
    UnitSquare,
    /// `[0,1]²` minus the closed quadrant `[1/2,1]²`.
    LShape,
}

impl Domain {
    pub fn area(self) -> f64 {
        match self {
            Domain::UnitSquare => 1.0,
            Domain::LShape => 0.75,
        }
    }

    pub fn perimeter(self) -> f64 {
        4.0
    }

    pub fn name(self) -> &'static str {
        match self {
            Domain::UnitSquare => "unit-square",
            Domain::LShape => "l-shape",
        }
    }
}

impl std::str::FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "unit-square" | "square" => Ok(Domain::UnitSquare),
            "l-shape" | "lshape" => Ok(Domain::LShape),
            other => Err(Error::InvalidArgument(format!(
                "unknown domain `{other}` (expected unit-square or l-shape)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<[usize; 2]>,
    boundary_nodes: Vec<usize>,
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl Mesh {
    /// Builds a mesh from nodes and counterclockwise triangles, deriving the
    /// boundary. Fails on the first violated mesh invariant.
    pub fn new(nodes: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        check_triangles(&nodes, &triangles)?;
        let boundary_edges = derive_boundary_edges(&triangles)?;
        let mesh = Self::from_raw_parts(nodes, triangles, boundary_edges);
        if let Some(issue) = mesh.structural_issues().into_iter().next() {
            return Err(Error::InvalidMesh(issue));
        }
        Ok(mesh)
    }

    /// Assembles a mesh without any validation. Intended for diagnostics on
    /// possibly broken input; see [`validate_mesh`].
    pub fn from_raw_parts(nodes: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, boundary_edges: Vec<[usize; 2]>) -> Self {
        let mut boundary_nodes: Vec<usize> = boundary_edges.iter().flatten().copied().collect();
        boundary_nodes.sort_unstable();
        boundary_nodes.dedup();
        Self {
            nodes,
            triangles,
            boundary_edges,
            boundary_nodes,
        }
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    /// Boundary node indices in ascending order. Row `i` of the trace matrix
    /// corresponds to `boundary_nodes()[i]`.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_boundary_nodes(&self) -> usize {
        self.boundary_nodes.len()
    }

    pub fn triangle_signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_signed_area(t)).sum()
    }

    pub fn edge_length(&self, [a, b]: [usize; 2]) -> f64 {
        let (p, q) = (self.nodes[a], self.nodes[b]);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    pub fn perimeter(&self) -> f64 {
        self.boundary_edges.iter().map(|&e| self.edge_length(e)).sum()
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|p| f(p[0], p[1])).collect()
    }

    /// Restriction of `f` to the boundary nodes, in [`Mesh::boundary_nodes`] order.
    pub fn interpolate_boundary(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.boundary_nodes
            .iter()
            .map(|&i| f(self.nodes[i][0], self.nodes[i][1]))
            .collect()
    }

    /// Issues that break conformity: inverted or degenerate triangles, edges
    /// shared inconsistently, non-simple boundary loops and hanging nodes.
    fn structural_issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        let n = self.nodes.len();
        let mut used = vec![false; n];
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                issues.push(format!("triangle {t} references a missing node"));
                continue;
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                issues.push(format!("triangle {t} repeats a node index"));
                continue;
            }
            tri.iter().for_each(|&i| used[i] = true);
            let area = self.triangle_signed_area(t);
            if area <= 0.0 {
                issues.push(format!("triangle {t} has non-positive signed area {area:e}"));
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            issues.push(format!("node {i} belongs to no triangle"));
        }
        if !issues.is_empty() {
            return issues;
        }

        let mut directed: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                *directed.entry((tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            if count > 1 {
                issues.push(format!("edge ({a},{b}) is used twice with the same orientation"));
            }
        }
        let mut undirected: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for &(a, b) in directed.keys() {
            *undirected.entry((a.min(b), a.max(b))).or_default() += 1;
        }
        for (&(a, b), &count) in &undirected {
            if count > 2 {
                issues.push(format!("edge ({a},{b}) is shared by more than two triangles"));
            }
        }

        let mut expected: Vec<[usize; 2]> = directed
            .keys()
            .filter(|&&(a, b)| !directed.contains_key(&(b, a)))
            .map(|&(a, b)| [a, b])
            .collect();
        let mut stored = self.boundary_edges.clone();
        expected.sort_unstable();
        stored.sort_unstable();
        if expected != stored {
            issues.push("boundary edges do not match triangle adjacency".to_string());
        }

        let mut outgoing = vec![0usize; n];
        let mut incoming = vec![0usize; n];
        for &[a, b] in &self.boundary_edges {
            outgoing[a] += 1;
            incoming[b] += 1;
        }
        for &i in &self.boundary_nodes {
            if outgoing[i] != 1 || incoming[i] != 1 {
                issues.push(format!(
                    "boundary node {i} lies on {} boundary edges (boundary is not a union of simple loops)",
                    outgoing[i] + incoming[i]
                ));
            }
        }

        for (e, &[a, b]) in self.boundary_edges.iter().enumerate() {
            let (p, q) = (self.nodes[a], self.nodes[b]);
            let len = (q[0] - p[0]).hypot(q[1] - p[1]);
            for (i, &x) in self.nodes.iter().enumerate() {
                if i == a || i == b {
                    continue;
                }
                let cross = (q[0] - p[0]) * (x[1] - p[1]) - (q[1] - p[1]) * (x[0] - p[0]);
                let along = (q[0] - p[0]) * (x[0] - p[0]) + (q[1] - p[1]) * (x[1] - p[1]);
                if cross.abs() <= 1e-12 * len * len && along > 0.0 && along < len * len {
                    issues.push(format!("hanging node {i} on boundary edge {e} ({a},{b})"));
                }
            }
        }
        issues
    }

    /// Number of closed boundary loops, counting only well-formed cycles.
    fn boundary_loop_count(&self) -> usize {
        let next: BTreeMap<usize, usize> = self.boundary_edges.iter().map(|&[a, b]| (a, b)).collect();
        let mut seen = std::collections::BTreeSet::new();
        let mut loops = 0;
        for &start in next.keys() {
            if seen.contains(&start) {
                continue;
            }
            let mut cur = start;
            let closed = loop {
                if !seen.insert(cur) {
                    break cur == start;
                }
                match next.get(&cur) {
                    Some(&nx) => cur = nx,
                    None => break false,
                }
            };
            if closed {
                loops += 1;
            }
        }
        loops
    }
}

fn check_triangles(nodes: &[[f64; 2]], triangles: &[[usize; 3]]) -> Result<()> {
    for (t, tri) in triangles.iter().enumerate() {
        if let Some(&i) = tri.iter().find(|&&i| i >= nodes.len()) {
            return Err(Error::InvalidMesh(format!(
                "triangle {t} references node {i}, but only {} nodes exist",
                nodes.len()
            )));
        }
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            return Err(Error::InvalidMesh(format!(
                "triangle {t} repeats a node index: {} {} {}",
                tri[0], tri[1], tri[2]
            )));
        }
        let area = signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
        if area == 0.0 {
            return Err(Error::DegenerateTriangle { index: t, area });
        }
        if area < 0.0 {
            return Err(Error::InvalidMesh(format!("triangle {t} is clockwise")));
        }
    }
    Ok(())
}

/// Boundary edges (edges used by a single triangle, oriented as in that
/// triangle), ordered loop by loop starting from the smallest node index.
fn derive_boundary_edges(triangles: &[[usize; 3]]) -> Result<Vec<[usize; 2]>> {
    let mut directed: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            if directed.insert((tri[k], tri[(k + 1) % 3]), t).is_some() {
                return Err(Error::InvalidMesh(format!(
                    "edge ({},{}) of triangle {t} is already used with the same orientation",
                    tri[k],
                    tri[(k + 1) % 3]
                )));
            }
        }
    }
    let mut next: BTreeMap<usize, usize> = BTreeMap::new();
    for &(a, b) in directed.keys() {
        if !directed.contains_key(&(b, a)) && next.insert(a, b).is_some() {
            return Err(Error::InvalidMesh(format!(
                "node {a} starts two boundary edges (boundary is not a union of simple loops)"
            )));
        }
    }
    let mut edges = Vec::with_capacity(next.len());
    let mut remaining = next.clone();
    while let Some((&start, _)) = remaining.iter().next() {
        let mut cur = start;
        loop {
            let nx = match remaining.remove(&cur) {
                Some(nx) => nx,
                None => {
                    return Err(Error::InvalidMesh(format!(
                        "boundary loop through node {start} is not closed"
                    )))
                }
            };
            edges.push([cur, nx]);
            cur = nx;
            if cur == start {
                break;
            }
        }
    }
    Ok(edges)
}

/// Structured triangulation: `n` cells per unit length, each cell split along
/// its lower-left to upper-right diagonal.
///
/// For [`Domain::LShape`] an odd `n` is rounded up to the next even number so
/// that the removed quadrant is resolved exactly.
pub fn generate_structured_mesh(domain: Domain, n: usize) -> Mesh {
    assert!(n >= 1, "mesh resolution must be at least 1");
    let cells = match domain {
        Domain::UnitSquare => n,
        Domain::LShape => n + n % 2,
    };
    let h = 1.0 / cells as f64;
    let keep = |i: usize, j: usize| match domain {
        Domain::UnitSquare => true,
        Domain::LShape => !(2 * i >= cells && 2 * j >= cells),
    };

    let mut index = vec![usize::MAX; (cells + 1) * (cells + 1)];
    let grid = |i: usize, j: usize| j * (cells + 1) + i;
    for j in 0..cells {
        for i in 0..cells {
            if keep(i, j) {
                for (di, dj) in [(0, 0), (1, 0), (1, 1), (0, 1)] {
                    index[grid(i + di, j + dj)] = 0;
                }
            }
        }
    }
    let mut nodes = Vec::new();
    for j in 0..=cells {
        for i in 0..=cells {
            if index[grid(i, j)] == 0 {
                index[grid(i, j)] = nodes.len();
                nodes.push([i as f64 * h, j as f64 * h]);
            }
        }
    }
    let mut triangles = Vec::with_capacity(2 * cells * cells);
    for j in 0..cells {
        for i in 0..cells {
            if !keep(i, j) {
                continue;
            }
            let p00 = index[grid(i, j)];
            let p10 = index[grid(i + 1, j)];
            let p11 = index[grid(i + 1, j + 1)];
            let p01 = index[grid(i, j + 1)];
            triangles.push([p00, p10, p11]);
            triangles.push([p00, p11, p01]);
        }
    }
    Mesh::new(nodes, triangles).expect("structured meshes are valid by construction")
}

/// Summary produced by [`validate_mesh`].
#[derive(Debug, Clone, PartialEq)]
pub struct MeshDiagnostics {
    pub min_area: f64,
    pub max_area: f64,
    /// Smallest interior angle over all triangles, in degrees.
    pub min_angle_deg: f64,
    pub boundary_loops: usize,
    pub conforming: bool,
    pub issues: Vec<String>,
}

pub fn validate_mesh(mesh: &Mesh) -> MeshDiagnostics {
    let issues = mesh.structural_issues();
    let mut min_area = f64::INFINITY;
    let mut max_area = f64::NEG_INFINITY;
    let mut min_angle = f64::INFINITY;
    let n = mesh.nodes.len();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if tri.iter().any(|&i| i >= n) {
            continue;
        }
        let area = mesh.triangle_signed_area(t);
        min_area = min_area.min(area);
        max_area = max_area.max(area);
        for k in 0..3 {
            let o = mesh.nodes[tri[k]];
            let p = mesh.nodes[tri[(k + 1) % 3]];
            let q = mesh.nodes[tri[(k + 2) % 3]];
            let (u, v) = ([p[0] - o[0], p[1] - o[1]], [q[0] - o[0], q[1] - o[1]]);
            let denom = u[0].hypot(u[1]) * v[0].hypot(v[1]);
            if denom > 0.0 {
                let cos = ((u[0] * v[0] + u[1] * v[1]) / denom).clamp(-1.0, 1.0);
                min_angle = min_angle.min(cos.acos().to_degrees());
            }
        }
    }
    MeshDiagnostics {
        min_area,
        max_area,
        min_angle_deg: min_angle,
        boundary_loops: mesh.boundary_loop_count(),
        conforming: issues.is_empty(),
        issues,
    }
}

/// Result of [`load_mesh`]: the validated mesh plus notes about repairs.
#[derive(Debug, Clone)]
pub struct LoadedMesh {
    pub mesh: Mesh,
    pub notes: Vec<String>,
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<LoadedMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text, path)
}

/// Parses the mesh text format; `path` is only used in error messages.
pub fn parse_mesh(text: &str, path: &Path) -> Result<LoadedMesh> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let iter: Box<dyn Iterator<Item = (usize, &str)>> = Box::new(
        text.lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty()),
    );
    let mut lines = iter.peekable();

    type Lines<'a> = std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>;
    let header = |lines: &mut Lines<'_>, name: &str, required: bool| -> Result<Option<(usize, usize)>> {
        let Some(&(ln, line)) = lines.peek() else {
            return if required {
                Err(err(text.lines().count(), format!("missing `{name}` section")))
            } else {
                Ok(None)
            };
        };
        let mut it = line.split_whitespace();
        if it.next() != Some(name) {
            return if required {
                Err(err(ln, format!("expected `{name} <count>`, found `{line}`")))
            } else {
                Ok(None)
            };
        }
        let count = it
            .next()
            .and_then(|c| c.parse::<usize>().ok())
            .ok_or_else(|| err(ln, format!("`{name}` needs a non-negative integer count")))?;
        if it.next().is_some() {
            return Err(err(ln, format!("trailing tokens after `{name} {count}`")));
        }
        lines.next();
        Ok(Some((ln, count)))
    };

    fn row<T: std::str::FromStr, const K: usize>(
        line: &str,
        ln: usize,
        what: &str,
        err: &dyn Fn(usize, String) -> Error,
    ) -> Result<[T; K]> {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != K {
            return Err(err(ln, format!("{what} needs {K} values, found {}", toks.len())));
        }
        let mut out = Vec::with_capacity(K);
        for t in toks {
            out.push(
                t.parse::<T>()
                    .map_err(|_| err(ln, format!("cannot parse `{t}` in {what}")))?,
            );
        }
        Ok(out.try_into().unwrap_or_else(|_| unreachable!()))
    }

    let (_, n_nodes) = header(&mut lines, "nodes", true)?.expect("required");
    let mut nodes = Vec::with_capacity(n_nodes);
    for k in 0..n_nodes {
        let (ln, line) = next_row(&mut lines, "node", k, n_nodes, &err, text)?;
        let p: [f64; 2] = row(line, ln, &format!("node {k}"), &err)?;
        if !p.iter().all(|v| v.is_finite()) {
            return Err(err(ln, format!("node {k} has non-finite coordinates")));
        }
        nodes.push(p);
    }
    let (_, n_tri) = header(&mut lines, "triangles", true)?.expect("required");
    let mut triangles = Vec::with_capacity(n_tri);
    for k in 0..n_tri {
        let (ln, line) = next_row(&mut lines, "triangle", k, n_tri, &err, text)?;
        triangles.push(row::<usize, 3>(line, ln, &format!("triangle {k}"), &err)?);
    }
    let mut file_boundary = None;
    if let Some((_, n_b)) = header(&mut lines, "boundary", false)? {
        let mut edges = Vec::with_capacity(n_b);
        for k in 0..n_b {
            let (ln, line) = next_row(&mut lines, "boundary edge", k, n_b, &err, text)?;
            edges.push(row::<usize, 2>(line, ln, &format!("boundary edge {k}"), &err)?);
        }
        file_boundary = Some(edges);
    }
    if let Some((ln, line)) = lines.next() {
        return Err(err(ln, format!("unexpected content `{line}`")));
    }

    let mut notes = Vec::new();
    for (t, tri) in triangles.iter_mut().enumerate() {
        if let Some(&i) = tri.iter().find(|&&i| i >= nodes.len()) {
            return Err(Error::InvalidMesh(format!(
                "triangle {t} references node {i}, but only {} nodes exist",
                nodes.len()
            )));
        }
        if tri[0] != tri[1] && tri[1] != tri[2] && tri[0] != tri[2] {
            let area = signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            if area < 0.0 {
                tri.swap(1, 2);
                notes.push(format!("triangle {t} was clockwise; orientation repaired"));
            }
        }
    }
    let mesh = Mesh::new(nodes, triangles)?;
    if let Some(edges) = file_boundary {
        let undirected = |e: &[[usize; 2]]| {
            let mut v: Vec<[usize; 2]> = e.iter().map(|&[a, b]| [a.min(b), a.max(b)]).collect();
            v.sort_unstable();
            v
        };
        if undirected(&edges) != undirected(mesh.boundary_edges()) {
            return Err(Error::InvalidMesh(
                "boundary section disagrees with the boundary derived from triangles".into(),
            ));
        }
        let derived: std::collections::BTreeSet<[usize; 2]> = mesh.boundary_edges().iter().copied().collect();
        let flipped = edges.iter().filter(|e| !derived.contains(*e)).count();
        if flipped > 0 {
            notes.push(format!(
                "{flipped} boundary edges reoriented to keep the interior on the left"
            ));
        }
    }
    Ok(LoadedMesh { mesh, notes })
}

fn next_row<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    what: &str,
    k: usize,
    count: usize,
    err: &dyn Fn(usize, String) -> Error,
    text: &str,
) -> Result<(usize, &'a str)> {
    lines.next().ok_or_else(|| {
        err(
            text.lines().count(),
            format!("expected {count} {what} rows, file ends after {k}"),
        )
    })
}

/// Serializes a mesh in the text format read by [`load_mesh`]. Coordinates
/// use the shortest representation that round-trips exactly.
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "nodes {}", mesh.nodes.len());
    for p in &mesh.nodes {
        let _ = writeln!(s, "{} {}", p[0], p[1]);
    }
    let _ = writeln!(s, "triangles {}", mesh.triangles.len());
    for t in &mesh.triangles {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "boundary {}", mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let _ = writeln!(s, "{} {}", e[0], e[1]);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(m: &Mesh) -> (usize, usize, usize) {
        (m.num_nodes(), m.triangles().len(), m.boundary_edges().len())
    }

    #[test]
    fn structured_counts() {
        assert_eq!(counts(&generate_structured_mesh(Domain::UnitSquare, 1)), (4, 2, 4));
        assert_eq!(counts(&generate_structured_mesh(Domain::UnitSquare, 2)), (9, 8, 8));
        assert_eq!(counts(&generate_structured_mesh(Domain::LShape, 2)), (8, 6, 8));
    }

    #[test]
    fn l_shape_enumeration() {
        // n = 4: 16 cells minus the 4 in the removed quadrant; nodes are the
        // 25 grid points minus the 4 strictly beyond the re-entrant corner.
        let m = generate_structured_mesh(Domain::LShape, 4);
        assert_eq!(counts(&m), (21, 24, 16));
        let odd = generate_structured_mesh(Domain::LShape, 3);
        assert_eq!(counts(&odd), counts(&m));
    }

    proptest::proptest! {
        #[test]
        fn area_perimeter_and_round_trip(n in 1usize..24, l_shape in proptest::bool::ANY) {
            let domain = if l_shape { Domain::LShape } else { Domain::UnitSquare };
            let m = generate_structured_mesh(domain, n);
            approx::assert_relative_eq!(m.area(), domain.area(), max_relative = 1e-12);
            approx::assert_relative_eq!(m.perimeter(), domain.perimeter(), max_relative = 1e-12);
            let back = parse_mesh(&write_mesh(&m), Path::new("mem")).unwrap().mesh;
            proptest::prop_assert_eq!(counts(&back), counts(&m));
            proptest::prop_assert_eq!(back.nodes(), m.nodes());
        }
    }

    #[test]
    fn boundary_nodes_on_two_edges() {
        let m = generate_structured_mesh(Domain::LShape, 6);
        for &i in m.boundary_nodes() {
            let deg = m.boundary_edges().iter().filter(|e| e.contains(&i)).count();
            assert_eq!(deg, 2, "node {i}");
        }
    }

    #[test]
    fn outer_loop_is_counterclockwise() {
        let m = generate_structured_mesh(Domain::UnitSquare, 3);
        // shoelace over boundary edges gives +area for a counterclockwise loop
        let shoelace: f64 = m
            .boundary_edges()
            .iter()
            .map(|&[a, b]| {
                let (p, q) = (m.nodes()[a], m.nodes()[b]);
                0.5 * (p[0] * q[1] - q[0] * p[1])
            })
            .sum();
        assert!((shoelace - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagnostics_unit_square() {
        let d = validate_mesh(&generate_structured_mesh(Domain::UnitSquare, 2));
        assert!(d.conforming, "{:?}", d.issues);
        assert_eq!(d.boundary_loops, 1);
        assert!((d.min_angle_deg - 45.0).abs() < 1e-9);
        assert!((d.min_area - 0.125).abs() < 1e-15 && (d.max_area - 0.125).abs() < 1e-15);
    }

    #[test]
    fn diagnostics_l_shape_single_loop() {
        let d = validate_mesh(&generate_structured_mesh(Domain::LShape, 8));
        assert!(d.conforming);
        assert_eq!(d.boundary_loops, 1);
    }

    #[test]
    fn inverted_triangle_not_conforming() {
        let m = generate_structured_mesh(Domain::UnitSquare, 2);
        let mut tris = m.triangles().to_vec();
        tris[3].swap(1, 2);
        let raw = Mesh::from_raw_parts(m.nodes().to_vec(), tris, m.boundary_edges().to_vec());
        let d = validate_mesh(&raw);
        assert!(!d.conforming);
        assert!(d.min_area < 0.0);
    }

    #[test]
    fn hanging_node_detected() {
        // lower-left triangle uses the full diagonal 1-2; the upper-right half
        // is split at the diagonal's midpoint 4
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.5]];
        let tris = vec![[0, 1, 2], [1, 3, 4], [4, 3, 2]];
        assert!(Mesh::new(nodes.clone(), tris.clone()).is_err());
        let single_use = vec![[0, 1], [1, 2], [2, 0], [1, 3], [4, 1], [3, 2], [2, 4]];
        let raw = Mesh::from_raw_parts(nodes, tris, single_use);
        let d = validate_mesh(&raw);
        assert!(!d.conforming);
        assert!(d.issues.iter().any(|s| s.contains("hanging node 4")), "{:?}", d.issues);
    }

    #[test]
    fn rejects_degenerate_and_duplicate() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert!(matches!(
            Mesh::new(nodes.clone(), vec![[0, 1, 2]]),
            Err(Error::DegenerateTriangle { index: 0, .. })
        ));
        let e = Mesh::new(nodes, vec![[0, 1, 1]]).unwrap_err();
        assert!(e.to_string().contains("triangle 0"), "{e}");
    }

    #[test]
    fn text_round_trip() {
        let m = generate_structured_mesh(Domain::UnitSquare, 2);
        let back = parse_mesh(&write_mesh(&m), Path::new("mem")).unwrap();
        assert_eq!(back.mesh, m);
        assert!(back.notes.is_empty());
    }

    #[test]
    fn boundary_recomputed_when_absent() {
        let m = generate_structured_mesh(Domain::LShape, 4);
        let text = write_mesh(&m);
        let cut = text.find("boundary").unwrap();
        let back = parse_mesh(&text[..cut], Path::new("mem")).unwrap();
        assert_eq!(back.mesh, m);
    }

    #[test]
    fn clockwise_triangle_repaired() {
        let text = "# one cell\nnodes 4\n0 0\n1 0\n1 1\n0 1\ntriangles 2\n0 1 2\n0 3 2  # clockwise\n";
        let loaded = parse_mesh(text, Path::new("mem")).unwrap();
        assert_eq!(loaded.notes.len(), 1);
        assert!(loaded.notes[0].contains("triangle 1"));
        assert!(validate_mesh(&loaded.mesh).conforming);
        assert!((loaded.mesh.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn duplicate_index_names_triangle() {
        let text = "nodes 4\n0 0\n1 0\n1 1\n0 1\ntriangles 2\n0 1 2\n0 2 2\n";
        let e = parse_mesh(text, Path::new("mem")).unwrap_err();
        assert!(matches!(e, Error::InvalidMesh(_)));
        assert!(e.to_string().contains("triangle 1"), "{e}");
    }

    #[test]
    fn malformed_files() {
        for (text, needle) in [
            ("nodes x\n", "count"),
            ("nodes 2\n0 0\n", "node rows"),
            ("nodes 1\n0 0 0\ntriangles 0\n", "node 0"),
            ("nodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1\n", "triangle 0"),
            ("nodes 3\n0 0\n1 0\n0 1\n", "triangles"),
        ] {
            let e = parse_mesh(text, Path::new("bad.msh")).unwrap_err();
            assert!(matches!(e, Error::Parse { .. }), "{text:?} -> {e}");
            assert!(e.to_string().contains(needle), "{e}");
        }
    }

    #[test]
    fn open_boundary_rejected() {
        // bow-tie: two triangles touching at a single vertex
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        let e = Mesh::new(nodes, vec![[0, 1, 2], [0, 3, 4]]).unwrap_err();
        assert!(e.to_string().contains("node 0"), "{e}");
    }
}
