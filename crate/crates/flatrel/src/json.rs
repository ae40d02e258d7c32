//! JSON serialization for surfaces, in either exact or float mode.
//!
//! Document layout (format 1):
//! ```json
//! {
//!   "format": 1,
//!   "mode": "exact",
//!   "disc": 5,
//!   "triangles": [[0,1,2],[3,4,5]],
//!   "gluing": [[0,4],[1,5],[2,3]],
//!   "holonomy": {"0": [["1","0"],["0","0"]], ...},
//!   "labels": {"0": {"name": "p0", "order": 0}}
//! }
//! ```
//! In exact mode each coordinate is `[a, b]` meaning a + b·√disc with the
//! rational parts written as `"num/den"` strings; in float mode each
//! coordinate is a plain number. `labels` is keyed by the smallest corner of
//! each vertex class. Keys are emitted in sorted order so that output is
//! byte-stable.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::exactnum::{QuadNum, Rational};
use crate::surface::{SingLabel, Slot, SurfaceError, TriSurface, Vec2};

/// A surface in either numeric mode.
#[derive(Debug, Clone)]
pub enum AnySurface {
    Exact(TriSurface<QuadNum>),
    Float(TriSurface<f64>),
}

impl AnySurface {
    pub fn n_slots(&self) -> usize {
        match self {
            AnySurface::Exact(m) => m.hol.len(),
            AnySurface::Float(m) => m.hol.len(),
        }
    }

    pub fn validate(&self) -> Result<(), SurfaceError> {
        match self {
            AnySurface::Exact(m) => m.validate(),
            AnySurface::Float(m) => m.validate(),
        }
    }

    /// The exact surface, or an error in float mode (there is no float→exact
    /// conversion).
    pub fn exact(&self) -> Result<&TriSurface<QuadNum>, JsonError> {
        match self {
            AnySurface::Exact(m) => Ok(m),
            AnySurface::Float(_) => Err(JsonError::Mode(
                "operation requires exact mode".into(),
            )),
        }
    }

    /// The surface as floats, converting from exact if needed.
    pub fn to_float(&self) -> TriSurface<f64> {
        match self {
            AnySurface::Exact(m) => m.to_float(),
            AnySurface::Float(m) => m.clone(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum JsonError {
    #[error("json: {0}")]
    Serde(#[from] serde_json::Error),
    #[error("document: {0}")]
    Document(String),
    #[error("mode: {0}")]
    Mode(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NumRepr {
    Float(f64),
    Exact([String; 2]),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelDoc {
    name: String,
    order: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurfaceDoc {
    format: u32,
    mode: String,
    disc: u64,
    triangles: Vec<[Slot; 3]>,
    gluing: Vec<[Slot; 2]>,
    holonomy: BTreeMap<Slot, [NumRepr; 2]>,
    labels: BTreeMap<Slot, LabelDoc>,
}

fn rational_string(r: &Rational) -> String {
    if r.denom() == &num_bigint::BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn exact_repr(v: &QuadNum) -> NumRepr {
    NumRepr::Exact([rational_string(&v.a), rational_string(&v.b)])
}

fn parse_rational(s: &str) -> Result<Rational, JsonError> {
    Rational::from_str(s.trim())
        .map_err(|e| JsonError::Document(format!("bad rational {s:?}: {e}")))
}

fn common_doc<C>(
    m: &TriSurface<C>,
    mode: &str,
    disc: u64,
    holonomy: BTreeMap<Slot, [NumRepr; 2]>,
) -> SurfaceDoc
where
    C: crate::surface::Coord,
{
    let n = m.hol.len();
    let triangles = (0..n / 3).map(|t| [3 * t, 3 * t + 1, 3 * t + 2]).collect();
    let mut gluing = Vec::new();
    for s in 0..n {
        if s < m.pair[s] {
            gluing.push([s, m.pair[s]]);
        }
    }
    // One label entry per vertex class, keyed by its smallest corner.
    let mut labels = BTreeMap::new();
    let mut seen = vec![false; m.labels.len()];
    for c in 0..n {
        let k = m.corner_label[c];
        if !seen[k] {
            seen[k] = true;
            labels.insert(
                c,
                LabelDoc {
                    name: m.labels[k].name.clone(),
                    order: m.labels[k].order,
                },
            );
        }
    }
    SurfaceDoc {
        format: 1,
        mode: mode.to_string(),
        disc,
        triangles,
        gluing,
        holonomy,
        labels,
    }
}

/// Serialize a surface to pretty-printed JSON with stable key order.
pub fn to_json(m: &AnySurface) -> Result<String, JsonError> {
    let doc = match m {
        AnySurface::Exact(m) => {
            let holonomy = m
                .hol
                .iter()
                .enumerate()
                .map(|(s, v)| (s, [exact_repr(&v.x), exact_repr(&v.y)]))
                .collect();
            common_doc(m, "exact", m.disc, holonomy)
        }
        AnySurface::Float(m) => {
            let holonomy = m
                .hol
                .iter()
                .enumerate()
                .map(|(s, v)| (s, [NumRepr::Float(v.x), NumRepr::Float(v.y)]))
                .collect();
            common_doc(m, "float", 0, holonomy)
        }
    };
    let mut out = serde_json::to_string_pretty(&doc)?;
    out.push('\n');
    Ok(out)
}

fn doc_skeleton(doc: &SurfaceDoc) -> Result<(usize, Vec<Slot>), JsonError> {
    let n = 3 * doc.triangles.len();
    for (t, tri) in doc.triangles.iter().enumerate() {
        if *tri != [3 * t, 3 * t + 1, 3 * t + 2] {
            return Err(JsonError::Document(format!(
                "triangle {t} must list slots [{}, {}, {}]",
                3 * t,
                3 * t + 1,
                3 * t + 2
            )));
        }
    }
    let mut pair = vec![usize::MAX; n];
    for &[a, b] in &doc.gluing {
        if a >= n || b >= n || a == b {
            return Err(JsonError::Document(format!("bad gluing pair [{a}, {b}]")));
        }
        if pair[a] != usize::MAX || pair[b] != usize::MAX {
            return Err(JsonError::Document(format!(
                "slot {} or {} glued twice",
                a, b
            )));
        }
        pair[a] = b;
        pair[b] = a;
    }
    if let Some(s) = pair.iter().position(|&p| p == usize::MAX) {
        return Err(JsonError::Document(format!("slot {s} is unglued")));
    }
    Ok((n, pair))
}

fn doc_labels(
    doc: &SurfaceDoc,
    n: usize,
    pair: &[Slot],
) -> Result<(Vec<usize>, Vec<SingLabel>), JsonError> {
    // Recover vertex classes from the gluing, then match the declared labels.
    let fan_next = |c: Slot| pair[crate::surface::slot_prev(c)];
    let mut class = vec![usize::MAX; n];
    let mut reps: Vec<Slot> = Vec::new();
    for c0 in 0..n {
        if class[c0] != usize::MAX {
            continue;
        }
        let k = reps.len();
        let mut c = c0;
        loop {
            class[c] = k;
            c = fan_next(c);
            if c == c0 {
                break;
            }
        }
        reps.push(c0);
    }
    if doc.labels.len() != reps.len() {
        return Err(JsonError::Document(format!(
            "surface has {} vertex classes but {} labels given",
            reps.len(),
            doc.labels.len()
        )));
    }
    let mut labels: Vec<Option<SingLabel>> = vec![None; reps.len()];
    for (&c, l) in &doc.labels {
        if c >= n {
            return Err(JsonError::Document(format!("label corner {c} out of range")));
        }
        if c != reps[class[c]] {
            return Err(JsonError::Document(format!(
                "label must be keyed by the smallest corner of its class ({} vs {})",
                c,
                reps[class[c]]
            )));
        }
        labels[class[c]] = Some(SingLabel {
            name: l.name.clone(),
            order: l.order,
        });
    }
    let labels = labels
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| JsonError::Document("missing label for a vertex class".into()))?;
    Ok((class, labels))
}

/// Parse a surface document, validating geometry and combinatorics.
pub fn from_json(text: &str) -> Result<AnySurface, JsonError> {
    let doc: SurfaceDoc = serde_json::from_str(text)?;
    if doc.format != 1 {
        return Err(JsonError::Document(format!(
            "unsupported format {}",
            doc.format
        )));
    }
    let (n, pair) = doc_skeleton(&doc)?;
    if doc.holonomy.len() != n {
        return Err(JsonError::Document(format!(
            "expected {} holonomy entries, got {}",
            n,
            doc.holonomy.len()
        )));
    }
    let (corner_label, labels) = doc_labels(&doc, n, &pair)?;
    match doc.mode.as_str() {
        "exact" => {
            let mut hol = Vec::with_capacity(n);
            for s in 0..n {
                let entry = doc
                    .holonomy
                    .get(&s)
                    .ok_or_else(|| JsonError::Document(format!("missing holonomy for slot {s}")))?;
                let mut coords = Vec::with_capacity(2);
                for c in entry {
                    match c {
                        NumRepr::Exact([a, b]) => {
                            let a = parse_rational(a)?;
                            let b = parse_rational(b)?;
                            coords.push(QuadNum::new(a, b, doc.disc).map_err(|e| {
                                JsonError::Document(format!("slot {s}: {e}"))
                            })?);
                        }
                        NumRepr::Float(_) => {
                            return Err(JsonError::Mode(
                                "exact mode requires [a, b] string coordinates".into(),
                            ))
                        }
                    }
                }
                let y = coords.pop().unwrap();
                let x = coords.pop().unwrap();
                hol.push(Vec2::new(x, y));
            }
            let m = TriSurface::build(hol, pair, corner_label, labels, doc.disc)?;
            Ok(AnySurface::Exact(m))
        }
        "float" => {
            let mut hol = Vec::with_capacity(n);
            for s in 0..n {
                let entry = doc
                    .holonomy
                    .get(&s)
                    .ok_or_else(|| JsonError::Document(format!("missing holonomy for slot {s}")))?;
                let mut coords = Vec::with_capacity(2);
                for c in entry {
                    match c {
                        NumRepr::Float(x) => coords.push(*x),
                        NumRepr::Exact(_) => {
                            return Err(JsonError::Mode(
                                "float mode requires plain number coordinates".into(),
                            ))
                        }
                    }
                }
                let y = coords.pop().unwrap();
                let x = coords.pop().unwrap();
                hol.push(Vec2::new(x, y));
            }
            let m = TriSurface::build(hol, pair, corner_label, labels, 0)?;
            Ok(AnySurface::Float(m))
        }
        other => Err(JsonError::Mode(format!("unknown mode {other:?}"))),
    }
}

/// Read a surface from a file path.
pub fn read_surface(path: &std::path::Path) -> Result<AnySurface, JsonError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| JsonError::Document(format!("{}: {e}", path.display())))?;
    from_json(&text)
}

/// Write a surface to a file path.
pub fn write_surface(path: &std::path::Path, m: &AnySurface) -> Result<(), JsonError> {
    let text = to_json(m)?;
    std::fs::write(path, text)
        .map_err(|e| JsonError::Document(format!("{}: {e}", path.display())))
}
