//! Environment manifests in a restricted YAML subset:
//!
//! ```yaml
//! spack:
//!   specs:
//!     - "exageostat@1.2.0 +mpi ^openmpi ^starpu"
//!   config:
//!     install_tree: "/opt/software"
//! ```
//!
//! `specs` is a list of spec strings, `config` a flat map of scalars. Nested
//! config values and any other keys are rejected.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_yaml::Value;

use super::machine::{is_package_name, is_version};
use super::BuildSpecError;

/// One package request: `name[@version] [+flag|~flag|key=value]... [^dep]...`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PackageSpec {
    pub name: String,
    /// Opaque; compared only for exact equality.
    pub version_constraint: Option<String>,
    pub variants: BTreeSet<String>,
    /// Source order, no duplicates.
    pub dependencies: Vec<String>,
}

impl PackageSpec {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), version_constraint: None, variants: BTreeSet::new(), dependencies: Vec::new() }
    }

    pub fn with_version(mut self, v: impl Into<String>) -> Self {
        self.version_constraint = Some(v.into());
        self
    }

    pub fn with_variant(mut self, v: impl Into<String>) -> Self {
        self.variants.insert(v.into());
        self
    }

    pub fn with_dependency(mut self, d: impl Into<String>) -> Self {
        let d = d.into();
        if !self.dependencies.contains(&d) {
            self.dependencies.push(d);
        }
        self
    }

    /// Value of a `key=value` variant.
    pub fn variant_value(&self, key: &str) -> Option<&str> {
        self.variants.iter().find_map(|v| v.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
    }

    /// Replaces any `key=...` variant with `key=value`.
    pub fn set_variant_value(&mut self, key: &str, value: &str) {
        self.variants.retain(|v| !(v.starts_with(key) && v[key.len()..].starts_with('=')));
        self.variants.insert(format!("{key}={value}"));
    }

    pub fn parse(text: &str) -> Result<Self, BuildSpecError> {
        let bad = |why: &str| BuildSpecError::MalformedManifest(format!("spec '{text}': {why}"));
        let mut tokens = text.split_whitespace();
        let head = tokens.next().ok_or_else(|| bad("empty spec"))?;
        let split = head.find(['+', '~']).unwrap_or(head.len());
        let (name_ver, attached) = head.split_at(split);
        let (name, version) = match name_ver.split_once('@') {
            Some((n, v)) => (n, Some(v)),
            None => (name_ver, None),
        };
        if !is_package_name(name) {
            return Err(bad("invalid package name"));
        }
        if version.is_some_and(|v| !is_version(v)) {
            return Err(bad("invalid version"));
        }
        let mut spec = PackageSpec::new(name);
        spec.version_constraint = version.map(str::to_string);

        let mut keyed: HashMap<String, String> = HashMap::new();
        let mut add_variant = |spec: &mut PackageSpec, v: &str| -> Result<(), BuildSpecError> {
            if let Some((k, val)) = v.split_once('=') {
                if !is_package_name(k) || val.is_empty() || val.contains('=') {
                    return Err(bad(&format!("invalid variant '{v}'")));
                }
                if keyed.insert(k.to_string(), val.to_string()).is_some_and(|old| old != val) {
                    return Err(bad(&format!("variant '{k}' set twice")));
                }
            } else {
                let (sign, flag) = v.split_at(1);
                if !is_package_name(flag) {
                    return Err(bad(&format!("invalid variant '{v}'")));
                }
                let opposite = format!("{}{flag}", if sign == "+" { "~" } else { "+" });
                if spec.variants.contains(&opposite) {
                    return Err(bad(&format!("variant '{flag}' both enabled and disabled")));
                }
            }
            spec.variants.insert(v.to_string());
            Ok(())
        };
        for flag in split_flags(attached) {
            add_variant(&mut spec, flag)?;
        }
        for tok in tokens {
            if let Some(dep) = tok.strip_prefix('^') {
                if !is_package_name(dep) {
                    return Err(bad(&format!("invalid dependency '{tok}'")));
                }
                spec = spec.with_dependency(dep);
            } else if tok.starts_with(['+', '~']) {
                for flag in split_flags(tok) {
                    add_variant(&mut spec, flag)?;
                }
            } else if tok.contains('=') {
                add_variant(&mut spec, tok)?;
            } else {
                return Err(bad(&format!("unexpected token '{tok}'")));
            }
        }
        Ok(spec)
    }
}

/// `+a~b+c` → `["+a", "~b", "+c"]`
fn split_flags(s: &str) -> impl Iterator<Item = &str> {
    let starts: Vec<usize> = s.match_indices(['+', '~']).map(|(i, _)| i).collect();
    let ends: Vec<usize> = starts.iter().skip(1).copied().chain(std::iter::once(s.len())).collect();
    starts.into_iter().zip(ends).map(move |(a, b)| &s[a..b])
}

impl fmt::Display for PackageSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if let Some(v) = &self.version_constraint {
            write!(f, "@{v}")?;
        }
        for v in &self.variants {
            write!(f, " {v}")?;
        }
        for d in &self.dependencies {
            write!(f, " ^{d}")?;
        }
        Ok(())
    }
}

/// A generic software environment: ordered specs plus build options.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvironmentManifest {
    pub specs: Vec<PackageSpec>,
    pub config: BTreeMap<String, String>,
}

impl EnvironmentManifest {
    /// Validates non-emptiness, name uniqueness and acyclicity.
    pub fn new(specs: Vec<PackageSpec>, config: BTreeMap<String, String>) -> Result<Self, BuildSpecError> {
        if specs.is_empty() {
            return Err(BuildSpecError::MalformedManifest("specs list is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for s in &specs {
            if !seen.insert(s.name.as_str()) {
                return Err(BuildSpecError::DuplicatePackage(s.name.clone()));
            }
        }
        let m = Self { specs, config };
        if let Some(cycle) = m.find_cycle() {
            return Err(BuildSpecError::CyclicDependency(cycle));
        }
        Ok(m)
    }

    pub fn get(&self, name: &str) -> Option<&PackageSpec> {
        self.specs.iter().find(|s| s.name == name)
    }

    /// Spec names followed by every dependency reference, deduplicated, in
    /// first-seen order.
    pub fn referenced_packages(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        let names = self.specs.iter().map(|s| s.name.as_str());
        let deps = self.specs.iter().flat_map(|s| s.dependencies.iter().map(String::as_str));
        for n in names.chain(deps) {
            if !out.contains(&n) {
                out.push(n);
            }
        }
        out
    }

    /// First cycle among in-manifest dependency edges, as a closed path.
    fn find_cycle(&self) -> Option<Vec<String>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let index: HashMap<&str, usize> = self.specs.iter().enumerate().map(|(i, s)| (s.name.as_str(), i)).collect();
        let mut marks = vec![Mark::New; self.specs.len()];
        let mut path: Vec<usize> = Vec::new();

        fn visit(
            m: &EnvironmentManifest,
            index: &HashMap<&str, usize>,
            marks: &mut [Mark],
            path: &mut Vec<usize>,
            i: usize,
        ) -> Option<Vec<String>> {
            marks[i] = Mark::Active;
            path.push(i);
            for d in &m.specs[i].dependencies {
                let Some(&j) = index.get(d.as_str()) else {
                    continue;
                };
                match marks[j] {
                    Mark::Active => {
                        let start = path.iter().position(|&p| p == j).expect("active node is on the path");
                        let mut cycle: Vec<String> = path[start..].iter().map(|&p| m.specs[p].name.clone()).collect();
                        cycle.push(m.specs[j].name.clone());
                        return Some(cycle);
                    }
                    Mark::New => {
                        if let Some(c) = visit(m, index, marks, path, j) {
                            return Some(c);
                        }
                    }
                    Mark::Done => {}
                }
            }
            path.pop();
            marks[i] = Mark::Done;
            None
        }

        (0..self.specs.len()).find_map(|i| {
            if marks[i] == Mark::New {
                visit(self, &index, &mut marks, &mut path, i)
            } else {
                None
            }
        })
    }

    /// Serializes to the accepted YAML subset; [`parse_manifest`] inverts it
    /// exactly. All scalars are double-quoted.
    pub fn to_yaml(&self) -> String {
        let q = |s: &str| serde_json::to_string(s).expect("strings always serialize");
        let mut out = String::from("spack:\n  specs:\n");
        for s in &self.specs {
            out.push_str(&format!("    - {}\n", q(&s.to_string())));
        }
        if self.config.is_empty() {
            out.push_str("  config: {}\n");
        } else {
            out.push_str("  config:\n");
            for (k, v) in &self.config {
                out.push_str(&format!("    {}: {}\n", q(k), q(v)));
            }
        }
        out
    }
}

/// Parses the manifest subset. Specs keep source order.
pub fn parse_manifest(yaml_text: &str) -> Result<EnvironmentManifest, BuildSpecError> {
    let malformed = |why: String| BuildSpecError::MalformedManifest(why);
    let root: Value = serde_yaml::from_str(yaml_text).map_err(|e| malformed(e.to_string()))?;
    let top = root.as_mapping().ok_or_else(|| malformed("document must be a mapping".into()))?;
    if top.len() != 1 {
        return Err(malformed("document must have the single key 'spack'".into()));
    }
    let env =
        top.get("spack").and_then(Value::as_mapping).ok_or_else(|| malformed("'spack' must be a mapping".into()))?;
    for key in env.keys() {
        match key.as_str() {
            Some("specs" | "config") => {}
            _ => return Err(malformed(format!("unsupported key {}", scalar_text(key).unwrap_or_default()))),
        }
    }
    let specs = env
        .get("specs")
        .ok_or_else(|| malformed("missing 'specs'".into()))?
        .as_sequence()
        .ok_or_else(|| malformed("'specs' must be a list".into()))?
        .iter()
        .map(|v| {
            let text = v.as_str().ok_or_else(|| malformed("every spec must be a string".into()))?;
            PackageSpec::parse(text)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut config = BTreeMap::new();
    match env.get("config") {
        None | Some(Value::Null) => {}
        Some(Value::Mapping(map)) => {
            for (k, v) in map {
                let key = scalar_text(k).ok_or_else(|| malformed("config keys must be scalars".into()))?;
                let val = scalar_text(v).ok_or_else(|| malformed(format!("config '{key}' must be a scalar")))?;
                config.insert(key, val);
            }
        }
        Some(_) => return Err(malformed("'config' must be a mapping".into())),
    }
    EnvironmentManifest::new(specs, config)
}

fn scalar_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}
