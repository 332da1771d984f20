use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::VarModelError;

/// Default limit on the number of features enumerated for one unit.
pub const DEFAULT_FEATURE_CAP: usize = 8;
/// Hard upper bound for a configurable cap (65,536 products).
pub const MAX_FEATURE_CAP: usize = 16;

/// A preprocessor identifier treated as an on/off feature.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureMacro(String);

impl FeatureMacro {
    pub fn new(name: impl Into<String>) -> Result<Self, VarModelError> {
        let name = name.into();
        if is_c_identifier(&name) {
            Ok(Self(name))
        } else {
            Err(VarModelError::BadIdentifier(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FeatureMacro {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for FeatureMacro {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for FeatureMacro {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        FeatureMacro::new(s).map_err(serde::de::Error::custom)
    }
}

pub fn is_c_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// One total on/off assignment over a macro set.
///
/// The canonical text form lists macros in lexicographic order as
/// `NAME=1`/`NAME=0`, comma-separated, without whitespace. The empty
/// product (no features) renders as the empty string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Product {
    assignment: BTreeMap<FeatureMacro, bool>,
}

impl Product {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_assignment(assignment: BTreeMap<FeatureMacro, bool>) -> Self {
        Self { assignment }
    }

    pub fn assignment(&self) -> &BTreeMap<FeatureMacro, bool> {
        &self.assignment
    }

    pub fn is_enabled(&self, name: &str) -> Option<bool> {
        self.assignment.iter().find(|(m, _)| m.as_str() == name).map(|(_, v)| *v)
    }

    /// Macros switched on, in lexicographic order.
    pub fn enabled(&self) -> impl Iterator<Item = &FeatureMacro> {
        self.assignment.iter().filter(|(_, on)| **on).map(|(m, _)| m)
    }

    pub fn macros(&self) -> impl Iterator<Item = &FeatureMacro> {
        self.assignment.keys()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// True when this product assigns exactly the given macro set.
    pub fn is_total_over(&self, macros: &[FeatureMacro]) -> bool {
        self.assignment.len() == macros.len() && macros.iter().all(|m| self.assignment.contains_key(m))
    }
}

impl fmt::Display for Product {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, on)) in self.assignment.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}={}", name, if *on { 1 } else { 0 })?;
        }
        Ok(())
    }
}

impl FromStr for Product {
    type Err = VarModelError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        parse_product(text)
    }
}

impl PartialOrd for Product {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Product {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.to_string().cmp(&other.to_string())
    }
}

impl Serialize for Product {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Product {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_product(&s).map_err(serde::de::Error::custom)
    }
}

/// Parses comma-separated `NAME=0|1` pairs in any order, tolerating whitespace.
pub fn parse_product(text: &str) -> Result<Product, VarModelError> {
    let mut assignment = BTreeMap::new();
    if text.trim().is_empty() {
        return Ok(Product::empty());
    }
    for pair in text.split(',') {
        let bad = || VarModelError::BadProductSyntax(text.to_string());
        let (name, value) = pair.split_once('=').ok_or_else(bad)?;
        let name = FeatureMacro::new(name.trim()).map_err(|_| bad())?;
        let on = match value.trim() {
            "1" => true,
            "0" => false,
            _ => return Err(bad()),
        };
        if assignment.insert(name, on).is_some() {
            return Err(bad());
        }
    }
    Ok(Product { assignment })
}

pub fn format_product(product: &Product) -> String {
    product.to_string()
}

/// Canonical text of a product set: canonical products sorted and joined by `;`.
pub fn format_product_set<'a>(products: impl IntoIterator<Item = &'a Product>) -> String {
    let mut texts: Vec<String> = products.into_iter().map(|p| p.to_string()).collect();
    texts.sort();
    texts.dedup();
    texts.join(";")
}

/// Enumerates all `2^n` products over `macros`, sorted by canonical text.
pub fn enumerate_products(macros: &[FeatureMacro], cap: usize) -> Result<Vec<Product>, VarModelError> {
    if cap > MAX_FEATURE_CAP {
        return Err(VarModelError::CapTooLarge(cap));
    }
    let mut sorted: Vec<FeatureMacro> = macros.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() > cap {
        return Err(VarModelError::TooManyFeatures {
            count: sorted.len(),
            cap,
            macros: sorted.iter().map(|m| m.to_string()).collect(),
        });
    }
    let n = sorted.len();
    // First macro is the most significant bit, which yields canonical-text order
    // because every product shares the same names at the same positions.
    let products = (0u32..(1u32 << n))
        .map(|bits| {
            let assignment =
                sorted.iter().enumerate().map(|(j, m)| (m.clone(), bits & (1 << (n - 1 - j)) != 0)).collect();
            Product { assignment }
        })
        .collect();
    Ok(products)
}
