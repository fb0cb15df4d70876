//! The four pixel classes of a layout page and their visualization colors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Pixel class. The discriminant is the raw code stored in mask files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u8)]
pub enum ClassLabel {
    Background = 0,
    Text = 1,
    Figure = 2,
    Table = 3,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 4] = [
        ClassLabel::Background,
        ClassLabel::Text,
        ClassLabel::Figure,
        ClassLabel::Table,
    ];

    /// Classes that can appear as pasted assets and as annotation labels.
    pub const FOREGROUND: [ClassLabel; 3] = [ClassLabel::Text, ClassLabel::Figure, ClassLabel::Table];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<ClassLabel> {
        ClassLabel::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Background => "background",
            ClassLabel::Text => "text",
            ClassLabel::Figure => "figure",
            ClassLabel::Table => "table",
        }
    }

    pub fn display_color(self) -> [u8; 3] {
        match self {
            ClassLabel::Background => [0, 0, 0],
            ClassLabel::Text => [0, 255, 0],
            ClassLabel::Figure => [255, 0, 0],
            ClassLabel::Table => [0, 0, 255],
        }
    }

    pub fn is_foreground(self) -> bool {
        self != ClassLabel::Background
    }

    /// Figures and tables; the layers gated by image similarity.
    pub fn is_image(self) -> bool {
        matches!(self, ClassLabel::Figure | ClassLabel::Table)
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "background" => Ok(ClassLabel::Background),
            "text" => Ok(ClassLabel::Text),
            "figure" => Ok(ClassLabel::Figure),
            "table" => Ok(ClassLabel::Table),
            other => Err(Error::Schema(format!("unknown class {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_roundtrip() {
        for c in ClassLabel::ALL {
            assert_eq!(ClassLabel::from_code(c.code()), Some(c));
            assert_eq!(c.name().parse::<ClassLabel>().unwrap(), c);
        }
        assert_eq!(ClassLabel::from_code(4), None);
    }

    #[test]
    fn color_key() {
        assert_eq!(ClassLabel::Figure.display_color(), [255, 0, 0]);
        assert_eq!(ClassLabel::Table.display_color(), [0, 0, 255]);
        assert_eq!(ClassLabel::Text.display_color(), [0, 255, 0]);
        assert_eq!(ClassLabel::Background.display_color(), [0, 0, 0]);
    }

    #[test]
    fn unknown_class_is_schema_error() {
        assert!(matches!("photo".parse::<ClassLabel>(), Err(Error::Schema(_))));
    }
}
