//! Reader and writer for "CVAT for images 1.1" XML annotation documents.
//!
//! Only `<polygon>` and `<points>` shapes are modeled. Other elements and
//! attributes found in CVAT exports (`<meta>`, `<box>`, `source=...`) are
//! skipped and counted.

use std::fmt::Write as _;

use serde::Serialize;

use crate::class::ClassLabel;
use crate::error::{Error, Result};

pub const CVAT_VERSION: &str = "1.1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Polygon,
    Points,
}

impl ShapeKind {
    pub fn element(self) -> &'static str {
        match self {
            ShapeKind::Polygon => "polygon",
            ShapeKind::Points => "points",
        }
    }

    fn min_vertices(self) -> usize {
        match self {
            ShapeKind::Polygon => 3,
            ShapeKind::Points => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Shape {
    pub kind: ShapeKind,
    pub label: ClassLabel,
    pub vertices: Vec<(f64, f64)>,
    pub z_order: i32,
    pub occluded: bool,
}

impl Shape {
    pub fn polygon(label: ClassLabel, vertices: Vec<(f64, f64)>) -> Self {
        Shape {
            kind: ShapeKind::Polygon,
            label,
            vertices,
            z_order: 0,
            occluded: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageAnnotation {
    pub id: u32,
    pub name: String,
    pub width: u32,
    pub height: u32,
    pub shapes: Vec<Shape>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationDoc {
    pub images: Vec<ImageAnnotation>,
}

impl AnnotationDoc {
    pub fn image(&self, id: u32) -> Option<&ImageAnnotation> {
        self.images.iter().find(|img| img.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids: Vec<u32> = self.images.iter().map(|i| i.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Validation(format!("duplicate image id {}", w[0])));
        }
        for img in &self.images {
            for (index, shape) in img.shapes.iter().enumerate() {
                validate_shape(img, index, shape)?;
            }
        }
        Ok(())
    }

    /// Sorts images by id and shapes by z_order, keeping document order among
    /// equal keys. This is the order the writer emits.
    pub fn normalize(&mut self) {
        self.images.sort_by_key(|i| i.id);
        for img in &mut self.images {
            img.shapes.sort_by_key(|s| s.z_order);
        }
    }
}

fn validate_shape(img: &ImageAnnotation, index: usize, shape: &Shape) -> Result<()> {
    let what = || format!("image {} ({:?}) {} #{index}", img.id, img.name, shape.kind.element());
    if shape.label == ClassLabel::Background {
        return Err(Error::UnknownLabels(vec!["background".into()]));
    }
    if shape.vertices.len() < shape.kind.min_vertices() {
        return Err(Error::Validation(format!(
            "{} has {} vertices, needs at least {}",
            what(),
            shape.vertices.len(),
            shape.kind.min_vertices()
        )));
    }
    let (w, h) = (img.width as f64, img.height as f64);
    if let Some(&(x, y)) = shape
        .vertices
        .iter()
        .find(|&&(x, y)| !(x.is_finite() && y.is_finite() && (0.0..=w).contains(&x) && (0.0..=h).contains(&y)))
    {
        return Err(Error::Validation(format!(
            "{} has vertex ({x}, {y}) outside the {}x{} image",
            what(),
            img.width,
            img.height
        )));
    }
    Ok(())
}

fn escape_attr(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

pub fn format_points(vertices: &[(f64, f64)]) -> String {
    let mut s = String::new();
    for (i, (x, y)) in vertices.iter().enumerate() {
        if i > 0 {
            s.push(';');
        }
        write!(s, "{x:.2},{y:.2}").unwrap();
    }
    s
}

pub fn write_cvat_xml(doc: &AnnotationDoc) -> Vec<u8> {
    let mut images: Vec<&ImageAnnotation> = doc.images.iter().collect();
    images.sort_by_key(|i| i.id);

    let mut out = String::from("<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<annotations>\n");
    writeln!(out, "  <version>{CVAT_VERSION}</version>").unwrap();
    for img in images {
        writeln!(
            out,
            "  <image id=\"{}\" name=\"{}\" width=\"{}\" height=\"{}\">",
            img.id,
            escape_attr(&img.name),
            img.width,
            img.height
        )
        .unwrap();
        let mut shapes: Vec<&Shape> = img.shapes.iter().collect();
        shapes.sort_by_key(|s| s.z_order);
        for s in shapes {
            writeln!(
                out,
                "    <{} label=\"{}\" occluded=\"{}\" points=\"{}\" z_order=\"{}\"/>",
                s.kind.element(),
                s.label.name(),
                u8::from(s.occluded),
                format_points(&s.vertices),
                s.z_order
            )
            .unwrap();
        }
        out.push_str("  </image>\n");
    }
    out.push_str("</annotations>\n");
    out.into_bytes()
}

/// A parsed document plus the number of skipped elements and attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedAnnotations {
    pub doc: AnnotationDoc,
    pub ignored: usize,
}

fn xml_error(message: impl Into<String>, pos: roxmltree::TextPos) -> Error {
    Error::Xml {
        line: pos.row,
        column: pos.col,
        message: message.into(),
    }
}

fn attr<'a>(node: roxmltree::Node<'a, '_>, name: &str) -> Result<&'a str> {
    node.attribute(name).ok_or_else(|| {
        Error::Schema(format!("<{}> is missing attribute {name:?}", node.tag_name().name()))
    })
}

fn parse_num<T: std::str::FromStr>(node: roxmltree::Node, name: &str) -> Result<T> {
    let raw = attr(node, name)?;
    raw.trim()
        .parse()
        .map_err(|_| Error::Schema(format!("<{}> attribute {name}={raw:?} is not a number", node.tag_name().name())))
}

pub fn parse_points(raw: &str) -> Result<Vec<(f64, f64)>> {
    raw.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|pair| {
            let (x, y) = pair
                .split_once(',')
                .ok_or_else(|| Error::Schema(format!("malformed point {pair:?}")))?;
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Schema(format!("malformed coordinate in point {pair:?}")))
            };
            Ok((num(x)?, num(y)?))
        })
        .collect()
}

pub fn read_cvat_xml(bytes: &[u8]) -> Result<ParsedAnnotations> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let before = &bytes[..e.valid_up_to()];
        let line = before.iter().filter(|&&b| b == b'\n').count() as u32 + 1;
        let column = (before.len() - before.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1)) as u32 + 1;
        Error::Xml {
            line,
            column,
            message: "invalid UTF-8".into(),
        }
    })?;
    let xml = roxmltree::Document::parse(text).map_err(|e| xml_error(e.to_string(), e.pos()))?;
    let root = xml.root_element();
    if root.tag_name().name() != "annotations" {
        return Err(xml_error(
            format!("root element is <{}>, expected <annotations>", root.tag_name().name()),
            xml.text_pos_at(root.range().start),
        ));
    }

    let mut ignored = 0usize;
    let mut version = None;
    let mut images = Vec::new();
    let mut unknown_labels = Vec::new();

    for child in root.children().filter(|n| n.is_element()) {
        match child.tag_name().name() {
            "version" => version = Some(child.text().unwrap_or("").trim().to_string()),
            "image" => images.push(read_image(child, &mut ignored, &mut unknown_labels)?),
            other => {
                log::debug!("skipping <{other}>");
                ignored += 1;
            }
        }
    }

    match version.as_deref() {
        Some(CVAT_VERSION) => {}
        Some(v) => return Err(Error::UnsupportedVersion(v.to_string())),
        None => return Err(Error::UnsupportedVersion("<missing>".into())),
    }
    if !unknown_labels.is_empty() {
        unknown_labels.sort();
        unknown_labels.dedup();
        return Err(Error::UnknownLabels(unknown_labels));
    }
    if ignored > 0 {
        log::warn!("ignored {ignored} unsupported element(s) or attribute(s) in annotation document");
    }
    let doc = AnnotationDoc { images };
    doc.validate()?;
    Ok(ParsedAnnotations { doc, ignored })
}

fn read_image(
    node: roxmltree::Node,
    ignored: &mut usize,
    unknown_labels: &mut Vec<String>,
) -> Result<ImageAnnotation> {
    *ignored += node
        .attributes()
        .filter(|a| !matches!(a.name(), "id" | "name" | "width" | "height"))
        .count();
    let mut img = ImageAnnotation {
        id: parse_num(node, "id")?,
        name: attr(node, "name")?.to_string(),
        width: parse_num(node, "width")?,
        height: parse_num(node, "height")?,
        shapes: Vec::new(),
    };
    for child in node.children().filter(|n| n.is_element()) {
        let kind = match child.tag_name().name() {
            "polygon" => ShapeKind::Polygon,
            "points" => ShapeKind::Points,
            _ => {
                *ignored += 1;
                continue;
            }
        };
        *ignored += child
            .attributes()
            .filter(|a| !matches!(a.name(), "label" | "occluded" | "points" | "z_order"))
            .count();
        *ignored += child.children().filter(|n| n.is_element()).count();

        let raw_label = attr(child, "label")?;
        let label = match raw_label.parse::<ClassLabel>() {
            Ok(l) if l.is_foreground() => l,
            _ => {
                unknown_labels.push(raw_label.to_string());
                continue;
            }
        };
        let occluded = match child.attribute("occluded").unwrap_or("0") {
            "0" => false,
            "1" => true,
            other => return Err(Error::Schema(format!("occluded={other:?} is not 0 or 1"))),
        };
        let z_order = if child.has_attribute("z_order") {
            parse_num(child, "z_order")?
        } else {
            0
        };
        img.shapes.push(Shape {
            kind,
            label,
            vertices: parse_points(attr(child, "points")?)?,
            z_order,
            occluded,
        });
    }
    Ok(img)
}
