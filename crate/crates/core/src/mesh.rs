//! Reference-configuration tetrahedral meshes and discrete phase partitions.
//!
//! Node ordering of box meshes: node `(i, j, k)` of the `(nx+1)×(ny+1)×(nz+1)`
//! grid has index `i + (nx+1)·(j + (ny+1)·k)`. Cells are visited in the same
//! lexicographic order and each is split into six tetrahedra along its main
//! diagonal (Kuhn triangulation), one per permutation of the axes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::sum::pairwise_sum;
use crate::tensor3::{det, Mat3, Vec3};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeshError {
    #[error("invalid box dimensions: {0}")]
    BadDimensions(String),
    #[error("malformed mesh document: {0}")]
    Malformed(String),
    #[error("tetrahedron {element} has non-positive reference volume {volume}")]
    Inverted { element: usize, volume: f64 },
    #[error("face {face:?} is shared by {count} tetrahedra")]
    NonManifold { face: [usize; 3], count: usize },
    #[error("boundary tag refers to face {0:?}, which is not a boundary face")]
    UnknownBoundaryFace([usize; 3]),
    #[error("phase field has {got} labels but the mesh has {expected} tetrahedra")]
    LabelCount { expected: usize, got: usize },
    #[error("label {label} at element {element} exceeds the number of variants {variants}")]
    LabelRange { element: usize, label: usize, variants: usize },
}

/// Boundary region of a face of ∂Ω.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryTag {
    /// Elastically supported part (spring towards the target map).
    Gamma0,
    /// Traction part.
    Gamma1,
    #[default]
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteriorFace {
    /// Lower-index tetrahedron; `normal` is its outward normal.
    pub minus: usize,
    /// Higher-index tetrahedron.
    pub plus: usize,
    /// Node triple, ordered so that `(b − a) × (c − a)` points along `normal`.
    pub nodes: [usize; 3],
    pub normal: Vec3,
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFace {
    pub tet: usize,
    /// Node triple, ordered so that `(b − a) × (c − a)` points outward.
    pub nodes: [usize; 3],
    pub normal: Vec3,
    pub area: f64,
    pub tag: BoundaryTag,
}

/// One of the four faces of a tetrahedron.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceRef {
    Interior(usize),
    Boundary(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TetMesh {
    pub nodes: Vec<Vec3>,
    pub tets: Vec<[usize; 4]>,
    pub volumes: Vec<f64>,
    /// Inverse of the reference edge matrix `[X1−X0, X2−X0, X3−X0]` per tet.
    pub ref_inverse: Vec<Mat3>,
    pub interior_faces: Vec<InteriorFace>,
    pub boundary_faces: Vec<BoundaryFace>,
    pub tet_faces: Vec<[FaceRef; 4]>,
}

/// Tags for the six sides of a box mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxSides {
    pub x_min: BoundaryTag,
    pub x_max: BoundaryTag,
    pub y_min: BoundaryTag,
    pub y_max: BoundaryTag,
    pub z_min: BoundaryTag,
    pub z_max: BoundaryTag,
}

/// JSON mesh document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshDocument {
    pub nodes: Vec<[f64; 3]>,
    pub tets: Vec<[usize; 4]>,
    #[serde(default)]
    pub boundary_tags: Vec<TagEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TagEntry {
    pub face: [usize; 3],
    pub tag: BoundaryTag,
}

// Local faces of a tet as (face nodes, opposite node), in local indices.
const LOCAL_FACES: [([usize; 3], usize); 4] = [
    ([1, 2, 3], 0),
    ([0, 2, 3], 1),
    ([0, 1, 3], 2),
    ([0, 1, 2], 3),
];

fn sorted(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

/// Outward-oriented node triple, unit normal and area of a face whose opposite
/// vertex is `apex`.
fn oriented_face(nodes: &[Vec3], mut tri: [usize; 3], apex: usize) -> ([usize; 3], Vec3, f64) {
    let (a, b, c) = (nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
    let mut cr = (b - a).cross(&(c - a));
    if cr.dot(&(nodes[apex] - a)) > 0.0 {
        tri.swap(1, 2);
        cr = -cr;
    }
    let len = cr.norm();
    (tri, cr.scale(1.0 / len), 0.5 * len)
}

fn edge_matrix(nodes: &[Vec3], t: &[usize; 4]) -> Mat3 {
    let x0 = nodes[t[0]];
    Mat3::from_cols(nodes[t[1]] - x0, nodes[t[2]] - x0, nodes[t[3]] - x0)
}

impl TetMesh {
    /// Build and validate a mesh from raw arrays. Boundary faces not listed in
    /// `tags` are [`BoundaryTag::Free`].
    pub fn from_parts(
        nodes: Vec<Vec3>,
        tets: Vec<[usize; 4]>,
        tags: &[([usize; 3], BoundaryTag)],
    ) -> Result<Self, MeshError> {
        for (i, x) in nodes.iter().enumerate() {
            if !x.is_finite() {
                return Err(MeshError::Malformed(format!("node {i} has non-finite coordinates")));
            }
        }
        let mut volumes = Vec::with_capacity(tets.len());
        let mut ref_inverse = Vec::with_capacity(tets.len());
        for (e, t) in tets.iter().enumerate() {
            if let Some(&bad) = t.iter().find(|&&n| n >= nodes.len()) {
                return Err(MeshError::Malformed(format!(
                    "tet {e} references node {bad}, but there are {} nodes",
                    nodes.len()
                )));
            }
            let dm = edge_matrix(&nodes, t);
            let vol = det(&dm) / 6.0;
            if !(vol > 0.0) {
                return Err(MeshError::Inverted { element: e, volume: vol });
            }
            volumes.push(vol);
            ref_inverse.push(dm.inverse().expect("positive volume implies invertible"));
        }

        // face key -> list of (tet, local face)
        let mut adjacency: HashMap<[usize; 3], Vec<(usize, usize)>> = HashMap::new();
        let mut order: Vec<[usize; 3]> = Vec::new();
        for (e, t) in tets.iter().enumerate() {
            for (lf, (tri, _)) in LOCAL_FACES.iter().enumerate() {
                let key = sorted(tri.map(|i| t[i]));
                let entry = adjacency.entry(key).or_default();
                if entry.is_empty() {
                    order.push(key);
                }
                entry.push((e, lf));
            }
        }

        let tag_map: HashMap<[usize; 3], BoundaryTag> =
            tags.iter().map(|(f, t)| (sorted(*f), *t)).collect();

        let mut interior_faces = Vec::new();
        let mut boundary_faces = Vec::new();
        let placeholder = FaceRef::Boundary(usize::MAX);
        let mut tet_faces = vec![[placeholder; 4]; tets.len()];
        let mut boundary_keys = std::collections::HashSet::new();
        for key in &order {
            let sharing = &adjacency[key];
            match sharing.as_slice() {
                &[(e, lf)] => {
                    let t = &tets[e];
                    let (tri, apex) = LOCAL_FACES[lf];
                    let (nodes3, normal, area) =
                        oriented_face(&nodes, tri.map(|i| t[i]), t[apex]);
                    tet_faces[e][lf] = FaceRef::Boundary(boundary_faces.len());
                    boundary_keys.insert(*key);
                    boundary_faces.push(BoundaryFace {
                        tet: e,
                        nodes: nodes3,
                        normal,
                        area,
                        tag: tag_map.get(key).copied().unwrap_or_default(),
                    });
                }
                &[(e0, lf0), (e1, lf1)] => {
                    let ((minus, lfm), (plus, _)) =
                        if e0 < e1 { ((e0, lf0), (e1, lf1)) } else { ((e1, lf1), (e0, lf0)) };
                    if minus == plus {
                        return Err(MeshError::Malformed(format!(
                            "tet {minus} uses face {key:?} twice"
                        )));
                    }
                    let t = &tets[minus];
                    let (tri, apex) = LOCAL_FACES[lfm];
                    let (nodes3, normal, area) =
                        oriented_face(&nodes, tri.map(|i| t[i]), t[apex]);
                    let idx = interior_faces.len();
                    tet_faces[e0][lf0] = FaceRef::Interior(idx);
                    tet_faces[e1][lf1] = FaceRef::Interior(idx);
                    interior_faces.push(InteriorFace { minus, plus, nodes: nodes3, normal, area });
                }
                more => {
                    return Err(MeshError::NonManifold { face: *key, count: more.len() });
                }
            }
        }
        for (f, _) in tags {
            if !boundary_keys.contains(&sorted(*f)) {
                return Err(MeshError::UnknownBoundaryFace(*f));
            }
        }

        Ok(TetMesh { nodes, tets, volumes, ref_inverse, interior_faces, boundary_faces, tet_faces })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn total_volume(&self) -> f64 {
        pairwise_sum(&self.volumes)
    }

    pub fn boundary_area(&self) -> f64 {
        let a: Vec<f64> = self.boundary_faces.iter().map(|f| f.area).collect();
        pairwise_sum(&a)
    }

    /// Reference area of the boundary faces carrying `tag`.
    pub fn tagged_area(&self, tag: BoundaryTag) -> f64 {
        let a: Vec<f64> =
            self.boundary_faces.iter().filter(|f| f.tag == tag).map(|f| f.area).collect();
        pairwise_sum(&a)
    }

    pub fn centroid(&self, e: usize) -> Vec3 {
        let t = &self.tets[e];
        (self.nodes[t[0]] + self.nodes[t[1]] + self.nodes[t[2]] + self.nodes[t[3]]).scale(0.25)
    }

    /// Outward normal times area for each of the four faces of tet `e`.
    pub fn outward_face_vectors(&self, e: usize) -> [Vec3; 4] {
        self.tet_faces[e].map(|fr| match fr {
            FaceRef::Boundary(b) => self.boundary_faces[b].normal.scale(self.boundary_faces[b].area),
            FaceRef::Interior(i) => {
                let f = &self.interior_faces[i];
                let v = f.normal.scale(f.area);
                if f.minus == e {
                    v
                } else {
                    -v
                }
            }
        })
    }

    /// Neighbor of tet `e` across interior face `i`.
    pub fn across(&self, i: usize, e: usize) -> usize {
        let f = &self.interior_faces[i];
        if f.minus == e {
            f.plus
        } else {
            f.minus
        }
    }

    /// Combine two meshes into one with two disconnected components.
    pub fn disjoint_union(&self, other: &TetMesh) -> Result<TetMesh, MeshError> {
        let offset = self.nodes.len();
        let mut nodes = self.nodes.clone();
        nodes.extend_from_slice(&other.nodes);
        let mut tets = self.tets.clone();
        tets.extend(other.tets.iter().map(|t| t.map(|n| n + offset)));
        let mut tags: Vec<([usize; 3], BoundaryTag)> =
            self.boundary_faces.iter().map(|f| (f.nodes, f.tag)).collect();
        tags.extend(other.boundary_faces.iter().map(|f| (f.nodes.map(|n| n + offset), f.tag)));
        tags.retain(|(_, t)| *t != BoundaryTag::Free);
        TetMesh::from_parts(nodes, tets, &tags)
    }

    pub fn to_document(&self) -> MeshDocument {
        MeshDocument {
            nodes: self.nodes.iter().map(|x| x.0).collect(),
            tets: self.tets.clone(),
            boundary_tags: self
                .boundary_faces
                .iter()
                .filter(|f| f.tag != BoundaryTag::Free)
                .map(|f| TagEntry { face: f.nodes, tag: f.tag })
                .collect(),
        }
    }

    pub fn from_document(doc: &MeshDocument) -> Result<TetMesh, MeshError> {
        let tags: Vec<_> = doc.boundary_tags.iter().map(|t| (t.face, t.tag)).collect();
        TetMesh::from_parts(doc.nodes.iter().map(|&x| Vec3(x)).collect(), doc.tets.clone(), &tags)
    }
}

/// Parse and validate a JSON mesh document.
pub fn load_mesh(json: &str) -> Result<TetMesh, MeshError> {
    let doc: MeshDocument =
        serde_json::from_str(json).map_err(|e| MeshError::Malformed(e.to_string()))?;
    TetMesh::from_document(&doc)
}

/// Structured box `[0,Lx]×[0,Ly]×[0,Lz]` with `nx·ny·nz` cells, six tets per cell.
pub fn build_box_mesh(
    counts: [usize; 3],
    lengths: [f64; 3],
    sides: BoxSides,
) -> Result<TetMesh, MeshError> {
    if counts.contains(&0) {
        return Err(MeshError::BadDimensions(format!("cell counts must be ≥ 1, got {counts:?}")));
    }
    if lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(MeshError::BadDimensions(format!("lengths must be > 0, got {lengths:?}")));
    }
    let [nx, ny, nz] = counts;
    let node_id = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push(Vec3([
                    lengths[0] * i as f64 / nx as f64,
                    lengths[1] * j as f64 / ny as f64,
                    lengths[2] * k as f64 / nz as f64,
                ]));
            }
        }
    }

    const PERMS: [[usize; 3]; 6] =
        [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut tets = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let corner = |bits: usize| {
                    node_id(i + (bits & 1), j + ((bits >> 1) & 1), k + ((bits >> 2) & 1))
                };
                for p in PERMS {
                    let b1 = 1 << p[0];
                    let b2 = b1 | (1 << p[1]);
                    let mut t = [corner(0), corner(b1), corner(b2), corner(7)];
                    if det(&edge_matrix(&nodes, &t)) < 0.0 {
                        t.swap(2, 3);
                    }
                    tets.push(t);
                }
            }
        }
    }

    // Boundary tags by grid index; a face lies on a side iff all three nodes do.
    let grid = |n: usize| (n % (nx + 1), (n / (nx + 1)) % (ny + 1), n / ((nx + 1) * (ny + 1)));
    let side_of = |f: [usize; 3]| -> BoundaryTag {
        let g = f.map(grid);
        let all = |pred: &dyn Fn((usize, usize, usize)) -> bool| g.iter().all(|&x| pred(x));
        if all(&|x| x.0 == 0) {
            sides.x_min
        } else if all(&|x| x.0 == nx) {
            sides.x_max
        } else if all(&|x| x.1 == 0) {
            sides.y_min
        } else if all(&|x| x.1 == ny) {
            sides.y_max
        } else if all(&|x| x.2 == 0) {
            sides.z_min
        } else {
            sides.z_max
        }
    };
    let untagged = TetMesh::from_parts(nodes, tets, &[])?;
    let tags: Vec<_> = untagged
        .boundary_faces
        .iter()
        .map(|f| (f.nodes, side_of(f.nodes)))
        .filter(|(_, t)| *t != BoundaryTag::Free)
        .collect();
    if tags.is_empty() {
        return Ok(untagged);
    }
    TetMesh::from_parts(untagged.nodes, untagged.tets, &tags)
}

/// Discrete partition map: one phase label per tetrahedron, `0` = austenite,
/// `1..=M` = martensite variants.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhaseField {
    pub labels: Vec<usize>,
    pub variants: usize,
}

impl PhaseField {
    pub fn new(labels: Vec<usize>, variants: usize) -> Result<Self, MeshError> {
        if variants == 0 {
            return Err(MeshError::Malformed("at least one martensite variant is required".into()));
        }
        if let Some((element, &label)) = labels.iter().enumerate().find(|(_, &l)| l > variants) {
            return Err(MeshError::LabelRange { element, label, variants });
        }
        Ok(PhaseField { labels, variants })
    }

    pub fn uniform(n: usize, label: usize, variants: usize) -> Result<Self, MeshError> {
        Self::new(vec![label; n], variants)
    }

    /// Number of labels, `M + 1`.
    pub fn n_phases(&self) -> usize {
        self.variants + 1
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn check_against(&self, mesh: &TetMesh) -> Result<(), MeshError> {
        if self.labels.len() != mesh.n_tets() {
            return Err(MeshError::LabelCount { expected: mesh.n_tets(), got: self.labels.len() });
        }
        if let Some((element, &label)) =
            self.labels.iter().enumerate().find(|(_, &l)| l > self.variants)
        {
            return Err(MeshError::LabelRange { element, label, variants: self.variants });
        }
        Ok(())
    }

    /// Apply a phase permutation: label `i` becomes `perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> PhaseField {
        PhaseField { labels: self.labels.iter().map(|&l| perm[l]).collect(), variants: self.variants }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseBoundaryFace {
    /// Index into [`TetMesh::interior_faces`].
    pub face: usize,
    /// Label on the `plus` side.
    pub plus_label: usize,
    /// Label on the `minus` side.
    pub minus_label: usize,
    pub area: f64,
    /// Points from the minus tet into the plus tet.
    pub normal: Vec3,
}

/// Interior faces separating distinct phases. Faces on ∂Ω are never included.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhaseBoundary {
    pub faces: Vec<PhaseBoundaryFace>,
}

impl PhaseBoundary {
    pub fn total_area(&self) -> f64 {
        let a: Vec<f64> = self.faces.iter().map(|f| f.area).collect();
        pairwise_sum(&a)
    }
}

pub fn phase_boundary(mesh: &TetMesh, z: &PhaseField) -> Result<PhaseBoundary, MeshError> {
    z.check_against(mesh)?;
    let faces = mesh
        .interior_faces
        .iter()
        .enumerate()
        .filter_map(|(i, f)| {
            let (lp, lm) = (z.labels[f.plus], z.labels[f.minus]);
            (lp != lm).then_some(PhaseBoundaryFace {
                face: i,
                plus_label: lp,
                minus_label: lm,
                area: f.area,
                normal: f.normal,
            })
        })
        .collect();
    Ok(PhaseBoundary { faces })
}

/// Per phase, the reference area of phase-boundary faces adjacent to it.
pub fn partition_perimeter(mesh: &TetMesh, z: &PhaseField) -> Result<Vec<f64>, MeshError> {
    let pb = phase_boundary(mesh, z)?;
    let mut per_phase = vec![Vec::new(); z.n_phases()];
    for f in &pb.faces {
        per_phase[f.plus_label].push(f.area);
        per_phase[f.minus_label].push(f.area);
    }
    Ok(per_phase.iter().map(|a| pairwise_sum(a)).collect())
}
