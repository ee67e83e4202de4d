//! Triangle meshes with boundary tagging and interior-skeleton extraction,
//! plus the built-in generators and an ASCII exchange format.
//!
//! Conductor interiors are not meshed: a floating conductor appears only as
//! a hole whose boundary faces carry `Floating(eta)` tags. Element
//! orientation is normalized to counterclockwise on construction, so the
//! outward normal of local face `lf` is the clockwise rotation of its
//! tangent.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

/// Classification of a mesh face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    /// Shared by two elements; part of the trace skeleton.
    Interior,
    /// Prescribed potential, with a marker id selecting the data function.
    Dirichlet(usize),
    /// Prescribed normal flux, with a marker id.
    Neumann(usize),
    /// Boundary of floating conductor `eta` (1-based).
    Floating(usize),
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryTag::Interior => write!(f, "interior"),
            BoundaryTag::Dirichlet(m) => write!(f, "D {m}"),
            BoundaryTag::Neumann(m) => write!(f, "N {m}"),
            BoundaryTag::Floating(e) => write!(f, "C {e}"),
        }
    }
}

/// A unique mesh edge with its element adjacency.
#[derive(Debug, Clone)]
pub struct Face {
    /// Endpoint vertex indices, lower index first.
    pub vertices: (usize, usize),
    /// Adjacent (element, local face) pairs; 1 for boundary, 2 for interior.
    pub adjacent: Vec<(usize, usize)>,
    pub tag: BoundaryTag,
}

/// Conforming triangle mesh with classified faces.
#[derive(Debug, Clone)]
pub struct Mesh2D {
    pub vertices: Vec<[f64; 2]>,
    /// Vertex-index triples, counterclockwise.
    pub elements: Vec<[usize; 3]>,
    pub faces: Vec<Face>,
    /// Face index of each element's local face `lf` (edge v_lf -> v_{lf+1}).
    pub elem_faces: Vec<[usize; 3]>,
    /// Number of floating conductors M.
    pub conductor_count: usize,
}

impl Mesh2D {
    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_interior_faces(&self) -> usize {
        self.faces
            .iter()
            .filter(|f| f.tag == BoundaryTag::Interior)
            .count()
    }

    pub fn element_coords(&self, k: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.elements[k];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Positive element area (orientation is normalized on construction).
    pub fn element_area(&self, k: usize) -> f64 {
        let [a, b, c] = self.element_coords(k);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    }

    /// Length of the shortest edge of element `k` (the local mesh size h_k).
    pub fn shortest_edge(&self, k: usize) -> f64 {
        let [a, b, c] = self.element_coords(k);
        let d = |p: [f64; 2], q: [f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        d(a, b).min(d(b, c)).min(d(c, a))
    }

    /// Endpoints of local face `lf` of element `k`, in element order
    /// v_lf -> v_{lf+1}.
    pub fn face_endpoints(&self, k: usize, lf: usize) -> ([f64; 2], [f64; 2]) {
        let verts = self.elements[k];
        (
            self.vertices[verts[lf]],
            self.vertices[verts[(lf + 1) % 3]],
        )
    }

    pub fn face_length(&self, k: usize, lf: usize) -> f64 {
        let (a, b) = self.face_endpoints(k, lf);
        ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
    }

    /// Unit normal of local face `lf`, outward from element `k`.
    pub fn outward_normal(&self, k: usize, lf: usize) -> [f64; 2] {
        let (a, b) = self.face_endpoints(k, lf);
        let l = self.face_length(k, lf);
        [(b[1] - a[1]) / l, -(b[0] - a[0]) / l]
    }

    /// Whether local face `lf` of element `k` runs against the canonical
    /// (low vertex -> high vertex) direction of the underlying mesh face.
    pub fn face_reversed(&self, k: usize, lf: usize) -> bool {
        let verts = self.elements[k];
        verts[lf] > verts[(lf + 1) % 3]
    }
}

/// Build a validated mesh from raw vertices, triangles and boundary tags.
///
/// `boundary_tags` lists tagged edges as (v0, v1, tag); vertex order within
/// a pair is irrelevant. Every boundary edge must be tagged; interior edges
/// must not be.
pub fn build_skeleton(
    vertices: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    boundary_tags: &[(usize, usize, BoundaryTag)],
) -> Result<Mesh2D> {
    if elements.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let nv = vertices.len();
    let mut elements = elements;
    for (k, tri) in elements.iter_mut().enumerate() {
        for &v in tri.iter() {
            if v >= nv {
                return Err(Error::InvalidVertexIndex { elem: k, vertex: v });
            }
        }
        let [a, b, c] = *tri;
        let (pa, pb, pc) = (vertices[a], vertices[b], vertices[c]);
        let area2 = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]);
        let lmax2 = [(pa, pb), (pb, pc), (pc, pa)]
            .iter()
            .map(|(p, q)| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2))
            .fold(0.0f64, f64::max);
        if area2.abs() < 1e-14 * lmax2 {
            return Err(Error::DegenerateElement(k));
        }
        if area2 < 0.0 {
            *tri = [a, c, b];
        }
    }

    let mut tag_map: HashMap<(usize, usize), BoundaryTag> = HashMap::new();
    for &(u, v, tag) in boundary_tags {
        let key = (u.min(v), u.max(v));
        tag_map.insert(key, tag);
    }

    // faces in first-encounter (element, local face) order: deterministic
    let mut face_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut faces: Vec<Face> = Vec::new();
    let mut elem_faces = vec![[usize::MAX; 3]; elements.len()];
    for (k, &[a, b, c]) in elements.iter().enumerate() {
        for (lf, (u, v)) in [(a, b), (b, c), (c, a)].into_iter().enumerate() {
            let key = (u.min(v), u.max(v));
            let fi = *face_index.entry(key).or_insert_with(|| {
                faces.push(Face {
                    vertices: key,
                    adjacent: Vec::new(),
                    tag: BoundaryTag::Interior,
                });
                faces.len() - 1
            });
            if faces[fi].adjacent.len() == 2 {
                return Err(Error::NonManifoldEdge(key.0, key.1));
            }
            faces[fi].adjacent.push((k, lf));
            elem_faces[k][lf] = fi;
        }
    }

    let mut floating_used: Vec<usize> = Vec::new();
    for face in faces.iter_mut() {
        let key = face.vertices;
        match (face.adjacent.len(), tag_map.get(&key)) {
            (2, None) => {}
            (2, Some(tag)) => {
                return Err(Error::TagOnInteriorEdge(key.0, key.1, tag.to_string()));
            }
            (1, Some(&tag)) => {
                if tag == BoundaryTag::Interior {
                    return Err(Error::UntaggedBoundaryEdge(key.0, key.1));
                }
                if let BoundaryTag::Floating(eta) = tag {
                    floating_used.push(eta);
                }
                face.tag = tag;
            }
            (1, None) => {
                return Err(Error::UntaggedBoundaryEdge(key.0, key.1));
            }
            _ => unreachable!("adjacency count bounded by 2"),
        }
    }

    floating_used.sort_unstable();
    floating_used.dedup();
    let conductor_count = floating_used.last().copied().unwrap_or(0);
    if floating_used.first().is_some_and(|&f| f == 0) {
        return Err(Error::BadConductorIndices(
            "conductor index 0 is reserved".into(),
        ));
    }
    if floating_used.len() != conductor_count {
        return Err(Error::BadConductorIndices(format!(
            "used indices {floating_used:?} do not cover 1..={conductor_count}"
        )));
    }

    Ok(Mesh2D {
        vertices,
        elements,
        faces,
        elem_faces,
        conductor_count,
    })
}

/// Structured unit-square mesh: n x n cells, each split into two triangles,
/// entire boundary tagged `Dirichlet(0)`.
pub fn generate_unit_square(n: usize) -> Result<Mesh2D> {
    if n == 0 {
        return Err(Error::InvalidGeometry("unit square needs n >= 1".into()));
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    let mut elements = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            elements.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            elements.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    let mut tags = Vec::with_capacity(4 * n);
    for i in 0..n {
        tags.push((idx(i, 0), idx(i + 1, 0), BoundaryTag::Dirichlet(0)));
        tags.push((idx(i, n), idx(i + 1, n), BoundaryTag::Dirichlet(0)));
        tags.push((idx(0, i), idx(0, i + 1), BoundaryTag::Dirichlet(0)));
        tags.push((idx(n, i), idx(n, i + 1), BoundaryTag::Dirichlet(0)));
    }
    build_skeleton(vertices, elements, &tags)
}

/// Coaxial capacitor with a floating tube: two annuli [r0,r2] and [r3,r1]
/// with the gap (r2,r3) unmeshed. Inner circle `Dirichlet(0)`, outer circle
/// `Dirichlet(1)`, both gap circles `Floating(1)`. Circles are polygonal
/// with `n_azimuthal` segments.
pub fn generate_annulus_with_fpc(
    r0: f64,
    r2: f64,
    r3: f64,
    r1: f64,
    n_azimuthal: usize,
    n_radial_inner: usize,
    n_radial_outer: usize,
) -> Result<Mesh2D> {
    if !(r0 > 0.0 && r0 < r2 && r2 < r3 && r3 < r1) {
        return Err(Error::InvalidGeometry(format!(
            "radii must satisfy 0 < r0 < r2 < r3 < r1, got {r0}, {r2}, {r3}, {r1}"
        )));
    }
    if n_azimuthal < 8 {
        return Err(Error::InvalidGeometry(format!(
            "n_azimuthal = {n_azimuthal} too coarse, need >= 8"
        )));
    }
    if n_radial_inner == 0 || n_radial_outer == 0 {
        return Err(Error::InvalidGeometry("radial resolution must be >= 1".into()));
    }

    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let mut elements: Vec<[usize; 3]> = Vec::new();
    let mut tags: Vec<(usize, usize, BoundaryTag)> = Vec::new();

    let ring = |verts: &mut Vec<[f64; 2]>, r: f64| -> usize {
        let base = verts.len();
        for i in 0..n_azimuthal {
            let th = 2.0 * std::f64::consts::PI * i as f64 / n_azimuthal as f64;
            verts.push([r * th.cos(), r * th.sin()]);
        }
        base
    };
    let mut annulus = |ra: f64, rb: f64, nr: usize, tag_in: BoundaryTag, tag_out: BoundaryTag| {
        let bases: Vec<usize> = (0..=nr)
            .map(|j| {
                let r = ra + (rb - ra) * j as f64 / nr as f64;
                ring(&mut vertices, r)
            })
            .collect();
        for j in 0..nr {
            for i in 0..n_azimuthal {
                let i2 = (i + 1) % n_azimuthal;
                let (a, b) = (bases[j] + i, bases[j] + i2);
                let (c, d) = (bases[j + 1] + i, bases[j + 1] + i2);
                elements.push([a, b, d]);
                elements.push([a, d, c]);
            }
        }
        for i in 0..n_azimuthal {
            let i2 = (i + 1) % n_azimuthal;
            tags.push((bases[0] + i, bases[0] + i2, tag_in));
            tags.push((bases[nr] + i, bases[nr] + i2, tag_out));
        }
    };
    annulus(
        r0,
        r2,
        n_radial_inner,
        BoundaryTag::Dirichlet(0),
        BoundaryTag::Floating(1),
    );
    annulus(
        r3,
        r1,
        n_radial_outer,
        BoundaryTag::Floating(1),
        BoundaryTag::Dirichlet(1),
    );
    build_skeleton(vertices, elements, &tags)
}

/// Axis-aligned rectangular plate, defined in physical coordinates.
/// Edges must fall on grid lines of the enclosing structured mesh.
#[derive(Debug, Clone, Copy)]
pub struct PlateSpec {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

/// Rectangle `[0,width] x [0,height]` on an nx x ny structured grid with
/// rectangular plate holes. Left edge `Dirichlet(0)`, right edge
/// `Dirichlet(1)`, bottom/top `Neumann(0)`; plate `i` boundary is
/// `Floating(i+1)`.
pub fn generate_rect_with_fpc_plates(
    width: f64,
    height: f64,
    nx: usize,
    ny: usize,
    plates: &[PlateSpec],
) -> Result<Mesh2D> {
    if width <= 0.0 || height <= 0.0 || nx == 0 || ny == 0 {
        return Err(Error::InvalidGeometry(
            "rectangle dimensions and resolution must be positive".into(),
        ));
    }
    // snap plate corners to grid indices
    let snap = |v: f64, extent: f64, n: usize, what: &str| -> Result<usize> {
        let t = v / extent * n as f64;
        let i = t.round();
        if (t - i).abs() > 1e-9 {
            return Err(Error::InvalidGeometry(format!(
                "plate {what} = {v} does not lie on a grid line"
            )));
        }
        Ok(i as usize)
    };
    let mut cells: Vec<(usize, usize, usize, usize)> = Vec::with_capacity(plates.len());
    for p in plates {
        if !(p.x0 < p.x1 && p.y0 < p.y1) {
            return Err(Error::InvalidGeometry("plate corners out of order".into()));
        }
        let i0 = snap(p.x0, width, nx, "x0")?;
        let i1 = snap(p.x1, width, nx, "x1")?;
        let j0 = snap(p.y0, height, ny, "y0")?;
        let j1 = snap(p.y1, height, ny, "y1")?;
        if i0 == 0 || i1 >= nx || j0 == 0 || j1 >= ny {
            return Err(Error::InvalidGeometry(
                "plate touches or crosses the outer boundary".into(),
            ));
        }
        for &(pi0, pj0, pi1, pj1) in &cells {
            if i0 <= pi1 && pi0 <= i1 && j0 <= pj1 && pj0 <= j1 {
                return Err(Error::InvalidGeometry("plates overlap or touch".into()));
            }
        }
        cells.push((i0, j0, i1, j1));
    }

    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([
                i as f64 * width / nx as f64,
                j as f64 * height / ny as f64,
            ]);
        }
    }
    let in_plate =
        |i: usize, j: usize| cells.iter().any(|&(i0, j0, i1, j1)| i >= i0 && i < i1 && j >= j0 && j < j1);
    let mut elements = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if !in_plate(i, j) {
                elements.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                elements.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
    }
    let mut tags = Vec::new();
    for j in 0..ny {
        tags.push((idx(0, j), idx(0, j + 1), BoundaryTag::Dirichlet(0)));
        tags.push((idx(nx, j), idx(nx, j + 1), BoundaryTag::Dirichlet(1)));
    }
    for i in 0..nx {
        tags.push((idx(i, 0), idx(i + 1, 0), BoundaryTag::Neumann(0)));
        tags.push((idx(i, ny), idx(i + 1, ny), BoundaryTag::Neumann(0)));
    }
    for (eta, &(i0, j0, i1, j1)) in cells.iter().enumerate() {
        let tag = BoundaryTag::Floating(eta + 1);
        for i in i0..i1 {
            tags.push((idx(i, j0), idx(i + 1, j0), tag));
            tags.push((idx(i, j1), idx(i + 1, j1), tag));
        }
        for j in j0..j1 {
            tags.push((idx(i0, j), idx(i0, j + 1), tag));
            tags.push((idx(i1, j), idx(i1, j + 1), tag));
        }
    }
    build_skeleton(vertices, elements, &tags)
}

/// Unit square with a full-width floating slab occupying `y0 < y < y1`
/// (slab interior unmeshed). Bottom edge `Dirichlet(0)`, top edge
/// `Dirichlet(1)`, sides `Neumann(0)`, both slab surfaces `Floating(1)`.
/// `y0` and `y1` must fall on grid lines of the n-cell subdivision.
pub fn generate_slab_with_fpc(n: usize, y0: f64, y1: f64) -> Result<Mesh2D> {
    if n == 0 || !(0.0 < y0 && y0 < y1 && y1 < 1.0) {
        return Err(Error::InvalidGeometry(
            "slab needs n >= 1 and 0 < y0 < y1 < 1".into(),
        ));
    }
    let snap = |v: f64| -> Result<usize> {
        let t = v * n as f64;
        let i = t.round();
        if (t - i).abs() > 1e-9 || i < 1.0 || i > (n - 1) as f64 {
            return Err(Error::InvalidGeometry(format!(
                "slab surface y = {v} does not lie on an interior grid line"
            )));
        }
        Ok(i as usize)
    };
    let j0 = snap(y0)?;
    let j1 = snap(y1)?;
    if j0 >= j1 {
        return Err(Error::InvalidGeometry("slab has zero thickness".into()));
    }

    let mut vertices = Vec::new();
    let mut elements = Vec::new();
    let mut tags = Vec::new();
    let mut region = |vertices: &mut Vec<[f64; 2]>,
                      ja: usize,
                      jb: usize,
                      tag_bot: BoundaryTag,
                      tag_top: BoundaryTag| {
        let base = vertices.len();
        for j in ja..=jb {
            for i in 0..=n {
                vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
        let idx = |i: usize, j: usize| base + (j - ja) * (n + 1) + i;
        for j in ja..jb {
            for i in 0..n {
                elements.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                elements.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
        for i in 0..n {
            tags.push((idx(i, ja), idx(i + 1, ja), tag_bot));
            tags.push((idx(i, jb), idx(i + 1, jb), tag_top));
        }
        for j in ja..jb {
            tags.push((idx(0, j), idx(0, j + 1), BoundaryTag::Neumann(0)));
            tags.push((idx(n, j), idx(n, j + 1), BoundaryTag::Neumann(0)));
        }
    };
    region(
        &mut vertices,
        0,
        j0,
        BoundaryTag::Dirichlet(0),
        BoundaryTag::Floating(1),
    );
    region(
        &mut vertices,
        j1,
        n,
        BoundaryTag::Floating(1),
        BoundaryTag::Dirichlet(1),
    );
    build_skeleton(vertices, elements, &tags)
}

/// Write the mesh in the line-oriented ASCII format (interior faces are
/// omitted and reconstructed on load).
pub fn save_mesh(mesh: &Mesh2D, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "hdgmesh 1")?;
    writeln!(out, "vertices {}", mesh.vertices.len())?;
    for &[x, y] in &mesh.vertices {
        writeln!(out, "{x} {y}")?;
    }
    writeln!(out, "elements {}", mesh.elements.len())?;
    for &[a, b, c] in &mesh.elements {
        writeln!(out, "{a} {b} {c}")?;
    }
    let boundary: Vec<&Face> = mesh
        .faces
        .iter()
        .filter(|f| f.tag != BoundaryTag::Interior)
        .collect();
    writeln!(out, "faces {}", boundary.len())?;
    for f in boundary {
        writeln!(out, "{} {} {}", f.vertices.0, f.vertices.1, f.tag)?;
    }
    out.flush()?;
    Ok(())
}

/// Load a mesh from the ASCII format, running full validation.
pub fn load_mesh(path: &Path) -> Result<Mesh2D> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| match l {
            Ok(s) => !s.trim().is_empty(),
            Err(_) => true,
        });

    let parse_err = |line: usize, msg: &str| Error::MeshParse {
        line,
        msg: msg.to_string(),
    };
    let mut next = |expect: &str| -> Result<(usize, Vec<String>)> {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(0, &format!("unexpected end of file, expected {expect}")))?;
        let l = l?;
        Ok((ln, l.split_whitespace().map(str::to_string).collect()))
    };

    let (ln, head) = next("header")?;
    if head != ["hdgmesh", "1"] {
        return Err(parse_err(ln, "expected header `hdgmesh 1`"));
    }

    let section_count = |toks: &[String], ln: usize, name: &str| -> Result<usize> {
        if toks.len() != 2 || toks[0] != name {
            return Err(parse_err(ln, &format!("expected `{name} <count>`")));
        }
        toks[1]
            .parse::<usize>()
            .map_err(|_| parse_err(ln, &format!("bad {name} count `{}`", toks[1])))
    };

    let (ln, toks) = next("vertices section")?;
    let nv = section_count(&toks, ln, "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, toks) = next("vertex line")?;
        if toks.len() != 2 {
            return Err(parse_err(ln, "vertex line needs `x y`"));
        }
        let x: f64 = toks[0]
            .parse()
            .map_err(|_| parse_err(ln, &format!("bad coordinate `{}`", toks[0])))?;
        let y: f64 = toks[1]
            .parse()
            .map_err(|_| parse_err(ln, &format!("bad coordinate `{}`", toks[1])))?;
        vertices.push([x, y]);
    }

    let (ln, toks) = next("elements section")?;
    let ne = section_count(&toks, ln, "elements")?;
    let mut elements = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, toks) = next("element line")?;
        if toks.len() != 3 {
            return Err(parse_err(ln, "element line needs `i0 i1 i2`"));
        }
        let mut tri = [0usize; 3];
        for (t, s) in tri.iter_mut().zip(&toks) {
            *t = s
                .parse()
                .map_err(|_| parse_err(ln, &format!("bad vertex index `{s}`")))?;
        }
        elements.push(tri);
    }

    let (ln, toks) = next("faces section")?;
    let nf = section_count(&toks, ln, "faces")?;
    let mut tags = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, toks) = next("face line")?;
        if toks.len() < 3 || toks.len() > 4 {
            return Err(parse_err(ln, "face line needs `v0 v1 TAG [id]`"));
        }
        let v0: usize = toks[0]
            .parse()
            .map_err(|_| parse_err(ln, &format!("bad vertex index `{}`", toks[0])))?;
        let v1: usize = toks[1]
            .parse()
            .map_err(|_| parse_err(ln, &format!("bad vertex index `{}`", toks[1])))?;
        let id: Option<usize> = if toks.len() == 4 {
            Some(
                toks[3]
                    .parse()
                    .map_err(|_| parse_err(ln, &format!("bad tag id `{}`", toks[3])))?,
            )
        } else {
            None
        };
        let tag = match toks[2].as_str() {
            "D" => BoundaryTag::Dirichlet(id.unwrap_or(0)),
            "N" => BoundaryTag::Neumann(id.unwrap_or(0)),
            "C" => BoundaryTag::Floating(id.unwrap_or(1)),
            other => return Err(parse_err(ln, &format!("unknown tag `{other}`"))),
        };
        tags.push((v0, v1, tag));
    }

    build_skeleton(vertices, elements, &tags)
}
