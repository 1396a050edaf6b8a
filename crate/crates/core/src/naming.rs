//! Hierarchical names, content descriptors and the name-prefix FIB.
//!
//! A [`Name`] is an ordered, nonempty list of byte-string components. Its
//! canonical text form is `/c1/c2/...`; bytes that are not printable ASCII
//! (and the `%` and `/` characters) are written as `%XX` escapes so that any
//! component decoded off the wire renders and re-parses losslessly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Maximum number of components in a name.
pub const MAX_COMPONENTS: usize = 8;

/// Maximum length of a single component, in bytes.
pub const MAX_COMPONENT_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NameError {
    #[error("name must start with '/': {0:?}")]
    MissingLeadingSlash(String),
    #[error("name has an empty component: {0:?}")]
    EmptyComponent(String),
    #[error("name has no components")]
    NoComponents,
    #[error("name has {0} components (max {MAX_COMPONENTS})")]
    TooManyComponents(usize),
    #[error("component is {0} bytes (max {MAX_COMPONENT_LEN})")]
    ComponentTooLong(usize),
    #[error("component contains '/'")]
    SlashInComponent,
    #[error("bad percent escape in {0:?}")]
    BadEscape(String),
}

/// Hierarchical content name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name {
    components: Vec<Vec<u8>>,
}

impl Name {
    /// Builds a name from raw components, enforcing the count and size limits.
    pub fn from_components<I, C>(components: I) -> Result<Self, NameError>
    where
        I: IntoIterator<Item = C>,
        C: Into<Vec<u8>>,
    {
        let components: Vec<Vec<u8>> = components.into_iter().map(Into::into).collect();
        if components.is_empty() {
            return Err(NameError::NoComponents);
        }
        if components.len() > MAX_COMPONENTS {
            return Err(NameError::TooManyComponents(components.len()));
        }
        for c in &components {
            if c.is_empty() {
                return Err(NameError::EmptyComponent(String::new()));
            }
            if c.len() > MAX_COMPONENT_LEN {
                return Err(NameError::ComponentTooLong(c.len()));
            }
            if c.contains(&b'/') {
                return Err(NameError::SlashInComponent);
            }
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[Vec<u8>] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    /// Always false; names have at least one component.
    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// True iff `self` is a (non-strict) prefix of `other`.
    pub fn is_prefix_of(&self, other: &Name) -> bool {
        self.components.len() <= other.components.len()
            && self.components.iter().zip(&other.components).all(|(a, b)| a == b)
    }

    /// The first `len` components, or `None` when `len` is 0 or exceeds the name.
    pub fn prefix(&self, len: usize) -> Option<Name> {
        if len == 0 || len > self.components.len() {
            return None;
        }
        Some(Name {
            components: self.components[..len].to_vec(),
        })
    }

    /// Appends one component.
    pub fn child(&self, component: impl Into<Vec<u8>>) -> Result<Name, NameError> {
        let mut components = self.components.clone();
        components.push(component.into());
        Name::from_components(components)
    }
}

pub fn parse_name(text: &str) -> Result<Name, NameError> {
    let rest = text
        .strip_prefix('/')
        .ok_or_else(|| NameError::MissingLeadingSlash(text.to_string()))?;
    // A single trailing slash is tolerated and canonicalized away.
    let rest = rest.strip_suffix('/').unwrap_or(rest);
    if rest.is_empty() {
        return Err(NameError::NoComponents);
    }
    let mut components = Vec::new();
    for part in rest.split('/') {
        if part.is_empty() {
            return Err(NameError::EmptyComponent(text.to_string()));
        }
        components.push(unescape(part).ok_or_else(|| NameError::BadEscape(text.to_string()))?);
    }
    Name::from_components(components)
}

pub fn is_prefix(prefix: &Name, name: &Name) -> bool {
    prefix.is_prefix_of(name)
}

fn unescape(part: &str) -> Option<Vec<u8>> {
    let bytes = part.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = part.get(i + 1..i + 3)?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    Some(out)
}

fn needs_escape(b: u8) -> bool {
    !(0x21..=0x7e).contains(&b) || b == b'%' || b == b'/'
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.components {
            f.write_str("/")?;
            for &b in c {
                if needs_escape(b) {
                    write!(f, "%{b:02X}")?;
                } else {
                    write!(f, "{}", b as char)?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Name({self})")
    }
}

impl FromStr for Name {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_name(s)
    }
}

/// A name used in the pub/sub plane to label content.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentDescriptor(Name);

impl ContentDescriptor {
    pub fn new(name: Name) -> Self {
        Self(name)
    }

    pub fn name(&self) -> &Name {
        &self.0
    }

    pub fn into_name(self) -> Name {
        self.0
    }
}

impl From<Name> for ContentDescriptor {
    fn from(name: Name) -> Self {
        Self(name)
    }
}

impl FromStr for ContentDescriptor {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_name(s).map(Self)
    }
}

impl fmt::Display for ContentDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for ContentDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cd({})", self.0)
    }
}

/// Hierarchical subscription match: the subscribed CD is a prefix of at
/// least one CD the content was published under.
pub fn cd_matches(subscribed: &ContentDescriptor, published: &[ContentDescriptor]) -> bool {
    published.iter().any(|cd| subscribed.0.is_prefix_of(&cd.0))
}

/// Identifier of a forwarder face.
///
/// Face 0 is the local consumer application (subscribers and polling
/// clients), face 1 the local producer application. Link faces start at 2.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FaceId(pub u32);

impl FaceId {
    pub const APP: FaceId = FaceId(0);
    pub const PRODUCER: FaceId = FaceId(1);
    pub const FIRST_LINK: u32 = 2;

    pub fn is_local(self) -> bool {
        self.0 < Self::FIRST_LINK
    }
}

impl fmt::Debug for FaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FaceId::APP => f.write_str("app"),
            FaceId::PRODUCER => f.write_str("producer"),
            FaceId(n) => write!(f, "f{n}"),
        }
    }
}

impl fmt::Display for FaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Default, PartialEq, Eq)]
struct TrieNode {
    faces: BTreeSet<FaceId>,
    children: BTreeMap<Vec<u8>, TrieNode>,
}

impl TrieNode {
    fn is_vacant(&self) -> bool {
        self.faces.is_empty() && self.children.is_empty()
    }
}

/// Forwarding table keyed by name prefix, backed by a component trie.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct FibTable {
    root: TrieNode,
    len: usize,
}

impl FibTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of distinct prefixes with at least one face.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Adds `face` to the entry for `prefix`. Returns false if the pair was present.
    pub fn insert(&mut self, prefix: &Name, face: FaceId) -> bool {
        let mut node = &mut self.root;
        for c in prefix.components() {
            node = node.children.entry(c.clone()).or_default();
        }
        if node.faces.is_empty() {
            self.len += 1;
        }
        node.faces.insert(face)
    }

    /// Removes `face` from `prefix`; drops the entry once its face set is empty.
    pub fn remove(&mut self, prefix: &Name, face: FaceId) -> bool {
        fn walk(node: &mut TrieNode, comps: &[Vec<u8>], face: FaceId) -> (bool, bool) {
            match comps.split_first() {
                None => {
                    let removed = node.faces.remove(&face);
                    (removed, removed && node.faces.is_empty())
                }
                Some((head, tail)) => {
                    let Some(child) = node.children.get_mut(head) else {
                        return (false, false);
                    };
                    let res = walk(child, tail, face);
                    if child.is_vacant() {
                        node.children.remove(head);
                    }
                    res
                }
            }
        }
        let (removed, emptied) = walk(&mut self.root, prefix.components(), face);
        if emptied {
            self.len -= 1;
        }
        removed
    }

    pub fn get(&self, prefix: &Name) -> Option<&BTreeSet<FaceId>> {
        let mut node = &self.root;
        for c in prefix.components() {
            node = node.children.get(c)?;
        }
        (!node.faces.is_empty()).then_some(&node.faces)
    }

    /// Longest registered prefix of `name`, with its faces.
    pub fn longest_prefix_match(&self, name: &Name) -> Option<(Name, &BTreeSet<FaceId>)> {
        let mut node = &self.root;
        let mut best = None;
        for (depth, c) in name.components().iter().enumerate() {
            match node.children.get(c) {
                Some(child) => {
                    node = child;
                    if !node.faces.is_empty() {
                        best = Some((depth + 1, &node.faces));
                    }
                }
                None => break,
            }
        }
        best.map(|(len, faces)| (name.prefix(len).expect("depth within name"), faces))
    }

    /// All entries in component-lexicographic order.
    pub fn entries(&self) -> Vec<(Name, BTreeSet<FaceId>)> {
        fn walk(node: &TrieNode, path: &mut Vec<Vec<u8>>, out: &mut Vec<(Name, BTreeSet<FaceId>)>) {
            if !node.faces.is_empty() {
                let name = Name::from_components(path.clone()).expect("trie paths are valid names");
                out.push((name, node.faces.clone()));
            }
            for (c, child) in &node.children {
                path.push(c.clone());
                walk(child, path, out);
                path.pop();
            }
        }
        let mut out = Vec::with_capacity(self.len);
        walk(&self.root, &mut Vec::new(), &mut out);
        out
    }
}

impl fmt::Debug for FibTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries()).finish()
    }
}

pub fn longest_prefix_match<'a>(
    fib: &'a FibTable,
    name: &Name,
) -> Option<(Name, &'a BTreeSet<FaceId>)> {
    fib.longest_prefix_match(name)
}
