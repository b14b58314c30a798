//! Analytic shapes: circles, spheres, cylinders, the Clifford torus,
//! catenoids, helicoids, complex curves, graphs over disks, plane patches.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use super::io::KeyValues;
use super::mesh::SimplicialMesh;
use super::GeometryError;

pub type HeightFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// How a disk-shaped parameter domain is triangulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiskLayout {
    /// Concentric rings with `6i` vertices on ring `i`; the rim is a
    /// regular polygon on the domain circle.
    Rings,
    /// Equilateral lattice clipped to the disk; every interior star is a
    /// regular hexagon.
    Lattice,
}

#[derive(Clone)]
pub enum CatalogSpec {
    Circle { radius: f64, segments: usize },
    Ellipse { a: f64, b: f64, segments: usize },
    Sphere { radius: f64, subdivisions: usize },
    /// Open cylinder `S¹_R × [-half_length, half_length]` in R³.
    Cylinder { radius: f64, half_length: f64, around: usize, along: usize },
    /// `S¹_{√2} × S¹_{√2}` in R⁴.
    CliffordTorus { around_a: usize, around_b: usize },
    /// `r = neck·cosh(z/neck)`, `|z| ≤ half_height`, uniform in `z` (the
    /// coordinates `(θ, z/neck)` are conformal).
    Catenoid { neck: f64, half_height: f64, around: usize, along: usize },
    /// `(s cos θ, s sin θ, z)` with `θ = 2π·turns·z/height`, `|s| ≤ radius`,
    /// `0 ≤ z ≤ height`. Zero turns is a flat strip.
    Helicoid { radius: f64, height: f64, turns: f64, along: usize, across: usize },
    /// `z -> (z, z^m)` over `|z| ≤ radius`, in R⁴.
    ComplexCurve { m: u32, radius: f64, resolution: usize, layout: DiskLayout },
    /// Graph of `f` over the disk of the given radius, in R³.
    DiskGraph { f: HeightFn, radius: f64, rings: usize },
    /// Flat disk in the `x₁x₂`-plane of R³.
    PlanePatch { radius: f64, spacing: f64 },
}

impl fmt::Debug for CatalogSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DiskGraph { radius, rings, .. } => f
                .debug_struct("DiskGraph")
                .field("radius", radius)
                .field("rings", rings)
                .finish_non_exhaustive(),
            other => write!(f, "{}", other.name()),
        }
    }
}

impl CatalogSpec {
    pub fn circle(radius: f64, segments: usize) -> Self {
        Self::Circle { radius, segments }
    }

    pub fn sphere(radius: f64, subdivisions: usize) -> Self {
        Self::Sphere { radius, subdivisions }
    }

    pub fn clifford_torus(around_a: usize, around_b: usize) -> Self {
        Self::CliffordTorus { around_a, around_b }
    }

    pub fn plane_patch(radius: f64, spacing: f64) -> Self {
        Self::PlanePatch { radius, spacing }
    }

    pub fn flat_disk(radius: f64, rings: usize) -> Self {
        Self::DiskGraph {
            f: Arc::new(|_, _| 0.0),
            radius,
            rings,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Circle { .. } => "circle",
            Self::Ellipse { .. } => "ellipse",
            Self::Sphere { .. } => "sphere",
            Self::Cylinder { .. } => "cylinder",
            Self::CliffordTorus { .. } => "clifford_torus",
            Self::Catenoid { .. } => "catenoid",
            Self::Helicoid { .. } => "helicoid",
            Self::ComplexCurve { .. } => "complex_curve",
            Self::DiskGraph { .. } => "disk_graph",
            Self::PlanePatch { .. } => "plane_patch",
        }
    }

    /// Parses a key=value block with a `shape` key. Missing resolution
    /// keys get defaults.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self, GeometryError> {
        let shape = kv.get("shape").ok_or_else(|| GeometryError::Parse {
            line: 0,
            message: "missing key `shape`".into(),
        })?;
        let f = |k: &str, d: f64| kv.get_f64(k).map(|o| o.unwrap_or(d));
        let u = |k: &str, d: usize| kv.get_usize(k).map(|o| o.unwrap_or(d));
        let spec = match shape {
            "circle" => Self::Circle {
                radius: f("radius", 1.0)?,
                segments: u("segments", 256)?,
            },
            "ellipse" => Self::Ellipse {
                a: f("a", 2.0)?,
                b: f("b", 1.0)?,
                segments: u("segments", 256)?,
            },
            "sphere" => Self::Sphere {
                radius: f("radius", 1.0)?,
                subdivisions: u("subdivisions", 4)?,
            },
            "cylinder" => {
                let radius = f("radius", 2f64.sqrt())?;
                Self::Cylinder {
                    radius,
                    half_length: f("half_length", 4.0 * radius)?,
                    around: u("around", 64)?,
                    along: u("along", 128)?,
                }
            }
            "clifford_torus" => Self::CliffordTorus {
                around_a: u("around_a", 64)?,
                around_b: u("around_b", 64)?,
            },
            "catenoid" => Self::Catenoid {
                neck: f("neck", 1.0)?,
                half_height: f("half_height", 1.0)?,
                around: u("around", 64)?,
                along: u("along", 32)?,
            },
            "helicoid" => Self::Helicoid {
                radius: f("radius", 1.0)?,
                height: f("height", 1.0)?,
                turns: f("turns", 1.0)?,
                along: u("along", 128)?,
                across: u("across", 32)?,
            },
            "complex_curve" => Self::ComplexCurve {
                m: u("m", 2)? as u32,
                radius: f("radius", 1.0)?,
                resolution: u("resolution", 24)?,
                layout: match kv.get("layout").unwrap_or("rings") {
                    "rings" => DiskLayout::Rings,
                    "lattice" => DiskLayout::Lattice,
                    other => {
                        return Err(GeometryError::InvalidParameter {
                            name: "layout".into(),
                            value: other.into(),
                        })
                    }
                },
            },
            "plane_patch" => Self::PlanePatch {
                radius: f("radius", 10.0)?,
                spacing: f("spacing", 0.25)?,
            },
            "disk" => Self::flat_disk(f("radius", 1.0)?, u("rings", 16)?),
            other => {
                return Err(GeometryError::InvalidParameter {
                    name: "shape".into(),
                    value: other.into(),
                })
            }
        };
        Ok(spec)
    }

    pub fn generate(&self) -> Result<SimplicialMesh, GeometryError> {
        match self {
            &Self::Circle { radius, segments } => {
                positive("radius", radius)?;
                at_least("segments", segments, 3)?;
                ellipse(radius, radius, segments)
            }
            &Self::Ellipse { a, b, segments } => {
                positive("a", a)?;
                positive("b", b)?;
                at_least("segments", segments, 3)?;
                ellipse(a, b, segments)
            }
            &Self::Sphere { radius, subdivisions } => {
                positive("radius", radius)?;
                icosphere(radius, subdivisions)
            }
            &Self::Cylinder {
                radius,
                half_length,
                around,
                along,
            } => {
                positive("radius", radius)?;
                positive("half_length", half_length)?;
                at_least("around", around, 3)?;
                at_least("along", along, 1)?;
                tube(around, along, |th, s| {
                    let z = -half_length + 2.0 * half_length * s;
                    [radius * th.cos(), radius * th.sin(), z]
                })
            }
            &Self::CliffordTorus { around_a, around_b } => {
                at_least("around_a", around_a, 3)?;
                at_least("around_b", around_b, 3)?;
                clifford(around_a, around_b)
            }
            &Self::Catenoid {
                neck,
                half_height,
                around,
                along,
            } => {
                positive("neck", neck)?;
                positive("half_height", half_height)?;
                at_least("around", around, 3)?;
                at_least("along", along, 1)?;
                tube(around, along, |th, s| {
                    let z = -half_height + 2.0 * half_height * s;
                    let r = neck * (z / neck).cosh();
                    [r * th.cos(), r * th.sin(), z]
                })
            }
            &Self::Helicoid {
                radius,
                height,
                turns,
                along,
                across,
            } => {
                positive("radius", radius)?;
                positive("height", height)?;
                if !turns.is_finite() || turns < 0.0 {
                    return Err(invalid("turns", turns));
                }
                at_least("along", along, 1)?;
                at_least("across", across, 1)?;
                helicoid(radius, height, turns, along, across)
            }
            &Self::ComplexCurve {
                m,
                radius,
                resolution,
                layout,
            } => {
                positive("radius", radius)?;
                if m == 0 {
                    return Err(invalid("m", 0.0));
                }
                at_least("resolution", resolution, 1)?;
                let (pts, cells) = disk_domain(radius, resolution, layout);
                let mut v = Vec::with_capacity(pts.len() * 4);
                for &(x, y) in &pts {
                    let (mut re, mut im) = (1.0, 0.0);
                    for _ in 0..m {
                        (re, im) = (re * x - im * y, re * y + im * x);
                    }
                    v.extend_from_slice(&[x, y, re, im]);
                }
                SimplicialMesh::new(2, 4, v, cells, None)
            }
            Self::DiskGraph { f, radius, rings } => {
                positive("radius", *radius)?;
                at_least("rings", *rings, 1)?;
                let (pts, cells) = disk_domain(*radius, *rings, DiskLayout::Rings);
                let mut v = Vec::with_capacity(pts.len() * 3);
                for &(x, y) in &pts {
                    let z = f(x, y);
                    if !z.is_finite() {
                        return Err(invalid("f", z));
                    }
                    v.extend_from_slice(&[x, y, z]);
                }
                SimplicialMesh::new(2, 3, v, cells, None)
            }
            &Self::PlanePatch { radius, spacing } => {
                positive("radius", radius)?;
                positive("spacing", spacing)?;
                let res = (radius / spacing).round().max(1.0) as usize;
                let (pts, cells) = disk_domain(radius, res, DiskLayout::Lattice);
                let v = pts.iter().flat_map(|&(x, y)| [x, y, 0.0]).collect();
                SimplicialMesh::new(2, 3, v, cells, None)
            }
        }
    }
}

fn invalid(name: &str, value: f64) -> GeometryError {
    GeometryError::InvalidParameter {
        name: name.into(),
        value: value.to_string(),
    }
}

fn positive(name: &str, value: f64) -> Result<(), GeometryError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, value))
    }
}

fn at_least(name: &str, value: usize, min: usize) -> Result<(), GeometryError> {
    if value >= min {
        Ok(())
    } else {
        Err(invalid(name, value as f64))
    }
}

/// Counter-clockwise polygon with vertices at equal parameter steps.
fn ellipse(a: f64, b: f64, k: usize) -> Result<SimplicialMesh, GeometryError> {
    let mut v = Vec::with_capacity(2 * k);
    for i in 0..k {
        let t = 2.0 * PI * i as f64 / k as f64;
        v.push(a * t.cos());
        v.push(b * t.sin());
    }
    let cells = (0..k).flat_map(|i| [i, (i + 1) % k]).collect();
    SimplicialMesh::new(1, 2, v, cells, None)
}

/// Subdivided icosahedron projected to the sphere, outward oriented.
fn icosphere(radius: f64, levels: usize) -> Result<SimplicialMesh, GeometryError> {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pts: Vec<[f64; 3]> = vec![
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ];
    for q in &mut pts {
        let l = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
        q.iter_mut().for_each(|x| *x /= l);
    }
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..levels {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |i: usize, j: usize, pts: &mut Vec<[f64; 3]>| -> usize {
            let key = (i.min(j), i.max(j));
            *mid.entry(key).or_insert_with(|| {
                let a = pts[i];
                let b = pts[j];
                let mut m = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
                let l = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
                m.iter_mut().for_each(|x| *x /= l);
                pts.push(m);
                pts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut pts);
            let bc = midpoint(b, c, &mut pts);
            let ca = midpoint(c, a, &mut pts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let v = pts.iter().flat_map(|q| q.map(|x| radius * x)).collect();
    let cells = faces.iter().flatten().copied().collect();
    SimplicialMesh::new(2, 3, v, cells, None)
}

/// Surface of revolution type grid: periodic in the first parameter
/// (`around` steps of 2π/around), open in the second (`along` intervals of
/// `[0, 1]`). `param(θ, s)` must be oriented so that `∂θ × ∂s` is outward.
fn tube(
    around: usize,
    along: usize,
    param: impl Fn(f64, f64) -> [f64; 3],
) -> Result<SimplicialMesh, GeometryError> {
    let mut v = Vec::with_capacity(around * (along + 1) * 3);
    for j in 0..=along {
        let s = j as f64 / along as f64;
        for i in 0..around {
            let th = 2.0 * PI * i as f64 / around as f64;
            v.extend_from_slice(&param(th, s));
        }
    }
    let idx = |i: usize, j: usize| j * around + i % around;
    let mut cells = Vec::with_capacity(around * along * 6);
    for j in 0..along {
        for i in 0..around {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            cells.extend_from_slice(&[a, b, c, a, c, d]);
        }
    }
    SimplicialMesh::new(2, 3, v, cells, None)
}

fn clifford(na: usize, nb: usize) -> Result<SimplicialMesh, GeometryError> {
    let r = 2f64.sqrt();
    let mut v = Vec::with_capacity(na * nb * 4);
    for j in 0..nb {
        let b = 2.0 * PI * j as f64 / nb as f64;
        for i in 0..na {
            let a = 2.0 * PI * i as f64 / na as f64;
            v.extend_from_slice(&[r * a.cos(), r * a.sin(), r * b.cos(), r * b.sin()]);
        }
    }
    let idx = |i: usize, j: usize| (j % nb) * na + i % na;
    let mut cells = Vec::with_capacity(na * nb * 6);
    for j in 0..nb {
        for i in 0..na {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            cells.extend_from_slice(&[a, b, c, a, c, d]);
        }
    }
    SimplicialMesh::new(2, 4, v, cells, None)
}

fn helicoid(
    radius: f64,
    height: f64,
    turns: f64,
    along: usize,
    across: usize,
) -> Result<SimplicialMesh, GeometryError> {
    let mut v = Vec::with_capacity((along + 1) * (across + 1) * 3);
    for j in 0..=along {
        let z = height * j as f64 / along as f64;
        let th = 2.0 * PI * turns * z / height;
        for i in 0..=across {
            let s = -radius + 2.0 * radius * i as f64 / across as f64;
            v.extend_from_slice(&[s * th.cos(), s * th.sin(), z]);
        }
    }
    let w = across + 1;
    let mut cells = Vec::with_capacity(along * across * 6);
    for j in 0..along {
        for i in 0..across {
            let (a, b, c, d) = (j * w + i, j * w + i + 1, (j + 1) * w + i + 1, (j + 1) * w + i);
            cells.extend_from_slice(&[a, b, c, a, c, d]);
        }
    }
    SimplicialMesh::new(2, 3, v, cells, None)
}

/// Triangulated disk of the given radius in the plane, counter-clockwise.
/// `resolution` is the number of rings, or the number of lattice spacings
/// per radius.
pub fn disk_domain(radius: f64, resolution: usize, layout: DiskLayout) -> (Vec<(f64, f64)>, Vec<usize>) {
    match layout {
        DiskLayout::Rings => ring_disk(radius, resolution),
        DiskLayout::Lattice => lattice_disk(radius, radius / resolution as f64),
    }
}

fn ring_disk(radius: f64, rings: usize) -> (Vec<(f64, f64)>, Vec<usize>) {
    let mut pts = vec![(0.0, 0.0)];
    let mut start = vec![0usize];
    for i in 1..=rings {
        start.push(pts.len());
        let r = radius * i as f64 / rings as f64;
        let k = 6 * i;
        for j in 0..k {
            let t = 2.0 * PI * j as f64 / k as f64;
            pts.push((r * t.cos(), r * t.sin()));
        }
    }
    let mut cells = Vec::new();
    for j in 0..6 {
        cells.extend_from_slice(&[0, 1 + j, 1 + (j + 1) % 6]);
    }
    for i in 1..rings {
        zip_rings(&mut cells, start[i], 6 * i, start[i + 1], 6 * (i + 1));
    }
    (pts, cells)
}

/// Triangulates the band between an inner ring (`ka` vertices from `sa`)
/// and an outer ring (`kb` vertices from `sb`), both starting at angle 0
/// and running counter-clockwise.
pub(crate) fn zip_rings(cells: &mut Vec<usize>, sa: usize, ka: usize, sb: usize, kb: usize) {
    // advance along whichever ring has the smaller next angle
    let (mut a, mut b) = (0usize, 0usize);
    while a < ka || b < kb {
        let next_a = (a + 1) as f64 / ka as f64;
        let next_b = (b + 1) as f64 / kb as f64;
        if b < kb && (a == ka || next_b <= next_a) {
            cells.extend_from_slice(&[sa + a % ka, sb + b, sb + (b + 1) % kb]);
            b += 1;
        } else {
            cells.extend_from_slice(&[sa + a, sb + b % kb, sa + (a + 1) % ka]);
            a += 1;
        }
    }
}

fn lattice_disk(radius: f64, h: f64) -> (Vec<(f64, f64)>, Vec<usize>) {
    let n = (radius / h).ceil() as i64 + 1;
    let ry = h * 3f64.sqrt() / 2.0;
    let ny = (radius / ry).ceil() as i64 + 1;
    let point = |i: i64, j: i64| (h * (i as f64 + 0.5 * j as f64), ry * j as f64);
    let inside = |p: (f64, f64)| p.0 * p.0 + p.1 * p.1 <= radius * radius * (1.0 + 1e-12);
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut pts = Vec::new();
    let mut cells = Vec::new();
    let mut id = |i: i64, j: i64, pts: &mut Vec<(f64, f64)>| -> usize {
        *index.entry((i, j)).or_insert_with(|| {
            pts.push(point(i, j));
            pts.len() - 1
        })
    };
    for j in -ny..ny {
        for i in -n - ny..n + ny {
            let tris = [[(i, j), (i + 1, j), (i, j + 1)], [(i + 1, j), (i + 1, j + 1), (i, j + 1)]];
            for t in tris {
                if t.iter().all(|&(a, b)| inside(point(a, b))) {
                    for &(a, b) in &t {
                        let k = id(a, b, &mut pts);
                        cells.push(k);
                    }
                }
            }
        }
    }
    (pts, cells)
}
