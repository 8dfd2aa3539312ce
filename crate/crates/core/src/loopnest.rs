//! Access traces of convolution and fully connected layers under loop
//! unrolling, and their pattern analysis.
//!
//! Weights are laid out row-major as `[k][c][f]` with `c` local to the
//! group; inputs as `[n][c][x]`. Loops run `n, g, x` outermost, then the
//! tiles of `k, c, f`; the unrolled offsets of all six factors are consumed
//! together in one step.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::{classify_trace, AddressTrace, Classification, PatternKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerType {
    #[serde(rename = "CONV")]
    Conv,
    #[serde(rename = "FC")]
    Fc,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub layer_type: LayerType,
    #[serde(default = "one")]
    pub n: u64,
    #[serde(default = "one")]
    pub g: u64,
    pub k: u64,
    pub c: u64,
    #[serde(default = "one")]
    pub x: u64,
    #[serde(default = "one")]
    pub f: u64,
    #[serde(default = "one")]
    pub stride: u64,
    pub word_width: u32,
}

impl LayerSpec {
    pub fn conv(k: u64, c: u64, x: u64, f: u64) -> Self {
        Self {
            layer_type: LayerType::Conv,
            n: 1,
            g: 1,
            k,
            c,
            x,
            f,
            stride: 1,
            word_width: 8,
        }
    }

    pub fn fc(k: u64, c: u64) -> Self {
        Self {
            layer_type: LayerType::Fc,
            ..Self::conv(k, c, 1, 1)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [("n", self.n), ("g", self.g), ("k", self.k), ("c", self.c), ("x", self.x), ("f", self.f), ("stride", self.stride)];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::validation(format!("layer.{name}"), "must be positive"));
        }
        if self.layer_type == LayerType::Fc && (self.x != 1 || self.f != 1) {
            return Err(Error::validation("layer.x", "a fully connected layer has x = f = 1"));
        }
        if self.c % self.g != 0 || self.k % self.g != 0 {
            return Err(Error::validation("layer.g", "groups must divide both k and c"));
        }
        if self.f > self.x {
            return Err(Error::validation("layer.f", "filter is wider than the input"));
        }
        if self.word_width == 0 {
            return Err(Error::validation("layer.word_width", "must be positive"));
        }
        Ok(())
    }

    /// Output positions along x.
    pub fn out_width(&self) -> u64 {
        (self.x - self.f) / self.stride + 1
    }

    fn k_per_group(&self) -> u64 {
        self.k / self.g
    }

    fn c_per_group(&self) -> u64 {
        self.c / self.g
    }

    /// Distinct weights of the layer.
    pub fn weight_count(&self) -> u64 {
        self.k * self.c_per_group() * self.f
    }

    /// Loop bounds (n, g, k, c, x, f) that the unroll degrees must divide.
    fn bounds(&self) -> [u64; 6] {
        [self.n, self.g, self.k_per_group(), self.c_per_group(), self.out_width(), self.f]
    }
}

/// Unroll degrees per loop factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Unrolling {
    pub n: u64,
    pub g: u64,
    pub k: u64,
    pub c: u64,
    pub x: u64,
    pub f: u64,
}

impl Unrolling {
    pub const NONE: Unrolling = Unrolling { n: 1, g: 1, k: 1, c: 1, x: 1, f: 1 };

    fn degrees(&self) -> [u64; 6] {
        [self.n, self.g, self.k, self.c, self.x, self.f]
    }

    fn from_degrees(d: [u64; 6]) -> Self {
        Self { n: d[0], g: d[1], k: d[2], c: d[3], x: d[4], f: d[5] }
    }

    pub fn product(&self) -> u64 {
        self.degrees().iter().product()
    }

    /// Checks that every degree divides its loop bound. The `k` and `c`
    /// degrees apply within a group, and `x` to the output width.
    pub fn validate(&self, layer: &LayerSpec) -> Result<()> {
        const NAMES: [&str; 6] = ["n", "g", "k", "c", "x", "f"];
        for ((d, b), name) in self.degrees().into_iter().zip(layer.bounds()).zip(NAMES) {
            if d == 0 || b % d != 0 {
                return Err(Error::validation(
                    format!("unrolling.{name}"),
                    format!("degree {d} does not divide loop bound {b}"),
                ));
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for Unrolling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "n{}g{}k{}c{}x{}f{}", self.n, self.g, self.k, self.c, self.x, self.f)
    }
}

fn divisors(v: u64) -> Vec<u64> {
    (1..=v).filter(|d| v % d == 0).collect()
}

/// Every unrolling of `layer` onto exactly `pe_count` processing elements,
/// in lexicographic order of (n, g, k, c, x, f).
pub fn enumerate_unrollings(layer: &LayerSpec, pe_count: u64) -> Vec<Unrolling> {
    if layer.validate().is_err() || pe_count == 0 {
        return Vec::new();
    }
    let options: Vec<Vec<u64>> = layer
        .bounds()
        .iter()
        .map(|&b| divisors(b).into_iter().filter(|d| pe_count % d == 0).collect())
        .collect();
    let mut out = Vec::new();
    let mut current = [1u64; 6];
    fn walk(i: usize, left: u64, options: &[Vec<u64>], current: &mut [u64; 6], out: &mut Vec<Unrolling>) {
        if i == 6 {
            if left == 1 {
                out.push(Unrolling::from_degrees(*current));
            }
            return;
        }
        for &d in &options[i] {
            if left % d == 0 {
                current[i] = d;
                walk(i + 1, left / d, options, current, out);
            }
        }
    }
    walk(0, pe_count, &options, &mut current, &mut out);
    out
}

/// Unrollings feasible for every layer at once.
pub fn common_unrollings(layers: &[LayerSpec], pe_count: u64) -> Vec<Unrolling> {
    let Some((first, rest)) = layers.split_first() else {
        return Vec::new();
    };
    let mut common = enumerate_unrollings(first, pe_count);
    for layer in rest {
        let feasible: HashSet<Unrolling> = enumerate_unrollings(layer, pe_count).into_iter().collect();
        common.retain(|u| feasible.contains(u));
    }
    common
}

/// Calls `visit` once per loop step with the iteration of every unrolled MAC
/// as (n, g, k_local, c_local, x_out, f).
fn for_each_step(layer: &LayerSpec, u: &Unrolling, mut visit: impl FnMut(&mut dyn Iterator<Item = [u64; 6]>)) {
    let [bn, bg, bk, bc, bx, bf] = layer.bounds();
    let d = u.degrees();
    for nt in 0..bn / d[0] {
        for gt in 0..bg / d[1] {
            for xt in 0..bx / d[4] {
                for kt in 0..bk / d[2] {
                    for ct in 0..bc / d[3] {
                        for ft in 0..bf / d[5] {
                            let base = [nt * d[0], gt * d[1], kt * d[2], ct * d[3], xt * d[4], ft * d[5]];
                            let mut macs = (0..u.product()).map(|mut i| {
                                let mut it = base;
                                for j in (0..6).rev() {
                                    it[j] += i % d[j];
                                    i /= d[j];
                                }
                                it
                            });
                            visit(&mut macs);
                        }
                    }
                }
            }
        }
    }
}

fn grouped_trace(
    layer: &LayerSpec,
    u: &Unrolling,
    address: impl Fn([u64; 6]) -> u64,
) -> Result<AddressTrace> {
    layer.validate()?;
    u.validate(layer)?;
    let mut addresses = Vec::new();
    let mut per_step = None;
    for_each_step(layer, u, |macs| {
        let mut seen = HashSet::new();
        let before = addresses.len();
        for it in macs {
            let a = address(it);
            if seen.insert(a) {
                addresses.push(a);
            }
        }
        per_step.get_or_insert(addresses.len() - before);
    });
    AddressTrace::grouped(addresses, per_step.unwrap_or(1))
}

/// Weight addresses consumed by each step, distinct within the step.
pub fn weight_trace(layer: &LayerSpec, u: &Unrolling) -> Result<AddressTrace> {
    let (kg, cg, f) = (layer.k_per_group(), layer.c_per_group(), layer.f);
    grouped_trace(layer, u, |[_, g, k, c, _, fi]| ((g * kg + k) * cg + c) * f + fi)
}

/// Input addresses consumed by each step, distinct within the step.
pub fn input_trace(layer: &LayerSpec, u: &Unrolling) -> Result<AddressTrace> {
    let (cg, x, c, stride) = (layer.c_per_group(), layer.x, layer.c, layer.stride);
    grouped_trace(layer, u, |[n, g, _, ci, xo, fi]| {
        n * c * x + (g * cg + ci) * x + xo * stride + fi
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerAnalysis {
    pub unique_addresses: u64,
    /// Counted in steps, each step fetching `words_per_step` words.
    pub cycle_length: u64,
    pub words_per_step: u64,
    pub required_port_width: u64,
    pub pattern: Classification,
}

/// Pattern of the step sequence, each distinct address group numbered in
/// order of first use.
pub fn analyze(trace: &AddressTrace, word_width: u32) -> LayerAnalysis {
    let unique: HashSet<u64> = trace.addresses().iter().copied().collect();
    let mut ids: HashMap<&[u64], u64> = HashMap::new();
    let steps: Vec<u64> = trace
        .steps()
        .map(|group| {
            let next = ids.len() as u64;
            *ids.entry(group).or_insert(next)
        })
        .collect();
    let wps = trace.words_per_step() as u64;
    let pattern = if steps.len() < 2 {
        Classification::Pattern(crate::pattern::PatternSpec::sequential(0))
    } else {
        classify_trace(&AddressTrace::scalar(steps)).unwrap_or(Classification::Unclassified)
    };
    let cycle_length = match &pattern {
        Classification::Pattern(p) => match p.kind {
            PatternKind::Cyclic | PatternKind::ShiftedCyclic => p.cycle_length,
            _ => 1,
        },
        Classification::Unclassified => ids.len() as u64,
    };
    LayerAnalysis {
        unique_addresses: unique.len() as u64,
        cycle_length,
        words_per_step: wps,
        required_port_width: wps * word_width as u64,
        pattern,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Network {
    pub name: String,
    pub layers: Vec<LayerSpec>,
}

impl Network {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let net: Network = crate::experiment::read_json(path.as_ref())?;
        for (i, layer) in net.layers.iter().enumerate() {
            layer.validate().map_err(|e| Error::validation(format!("layers[{i}]"), e.to_string()))?;
        }
        Ok(net)
    }
}
