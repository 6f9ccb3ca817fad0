//! Reply-forest reconstruction and post-class assignment.
//!
//! Every parentless post roots a tree. SERP-visible roots yield a `P1A1`
//! group; replies yield micro-collection groups:
//!
//! * `PnA1` for each maximal chain of self-replies hanging off the root
//!   and written by the root's author,
//! * `PnAn` for the whole conversation once at least two authors took part.
//!
//! Roots are members of their micro-collection groups too, unless
//! [`SegmentOptions::mc_exclude_root`] is set.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Post, Source, Vertical};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PostClass {
    P1A1,
    PnA1,
    PnAn,
    P1An,
}

impl PostClass {
    pub const ALL: [PostClass; 4] = [PostClass::P1A1, PostClass::PnA1, PostClass::PnAn, PostClass::P1An];

    pub fn as_str(self) -> &'static str {
        match self {
            PostClass::P1A1 => "P1A1",
            PostClass::PnA1 => "PnA1",
            PostClass::PnAn => "PnAn",
            PostClass::P1An => "P1An",
        }
    }

    pub fn is_micro_collection(self) -> bool {
        matches!(self, PostClass::PnA1 | PostClass::PnAn)
    }
}

impl fmt::Display for PostClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Reporting label: a post class or the micro-collection union.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    P1A1,
    MC,
    PnA1,
    PnAn,
    P1An,
}

impl ClassLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::P1A1 => "P1A1",
            ClassLabel::MC => "MC",
            ClassLabel::PnA1 => "PnA1",
            ClassLabel::PnAn => "PnAn",
            ClassLabel::P1An => "P1An",
        }
    }

    pub fn covers(self, class: PostClass) -> bool {
        match self {
            ClassLabel::MC => class.is_micro_collection(),
            other => ClassLabel::from(class) == other,
        }
    }
}

impl From<PostClass> for ClassLabel {
    fn from(c: PostClass) -> Self {
        match c {
            PostClass::P1A1 => ClassLabel::P1A1,
            PostClass::PnA1 => ClassLabel::PnA1,
            PostClass::PnAn => ClassLabel::PnAn,
            PostClass::P1An => ClassLabel::P1An,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "p1a1" => Ok(ClassLabel::P1A1),
            "mc" => Ok(ClassLabel::MC),
            "pna1" => Ok(ClassLabel::PnA1),
            "pnan" => Ok(ClassLabel::PnAn),
            "p1an" => Ok(ClassLabel::P1An),
            _ => Err(format!("unknown post class {s:?}")),
        }
    }
}

/// (topic, source, vertical): the row key of every report.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub topic_id: String,
    pub source: Source,
    pub vertical: Vertical,
}

impl CellKey {
    pub fn of(post: &Post) -> Self {
        CellKey {
            topic_id: post.topic_id.clone(),
            source: post.source.clone(),
            vertical: post.vertical.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostGroup {
    pub group_id: String,
    pub post_class: PostClass,
    pub post_ids: Vec<String>,
    pub root_id: String,
    pub topic_id: String,
    pub source: Source,
    pub vertical: Vertical,
    /// Authors of the posts the class was decided on.
    pub author_set: BTreeSet<String>,
}

impl PostGroup {
    /// Checks the per-class size and author invariants.
    pub fn check(&self, opts: &SegmentOptions) -> Result<(), String> {
        let posts = self.post_ids.len();
        let authors = self.author_set.len();
        let min_mc_posts = if opts.mc_exclude_root { 1 } else { 2 };
        let ok = match self.post_class {
            PostClass::P1A1 => posts == 1 && authors == 1,
            PostClass::P1An => posts == 1,
            PostClass::PnA1 => posts >= min_mc_posts && authors == 1,
            PostClass::PnAn => posts >= min_mc_posts && authors >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(format!(
                "group {} ({}) has {posts} posts and {authors} authors",
                self.group_id, self.post_class
            ))
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentOptions {
    pub mc_exclude_root: bool,
}

/// Which posts to segment; empty lists select everything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Selector {
    pub topics: Vec<String>,
    pub sources: Vec<Source>,
    pub verticals: Vec<Vertical>,
}

impl Selector {
    pub fn matches(&self, post: &Post) -> bool {
        (self.topics.is_empty() || self.topics.contains(&post.topic_id))
            && (self.sources.is_empty() || self.sources.contains(&post.source))
            && (self.verticals.is_empty() || self.verticals.contains(&post.vertical))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeRoot {
    Post {
        post_id: String,
        serp_visible: bool,
    },
    /// Stand-in for a parent that lies outside the selection.
    Detached {
        missing_parent: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    /// `None` only for the synthetic root of a detached tree.
    pub post_id: Option<String>,
    pub author: Option<String>,
    pub children: Vec<usize>,
}

/// A reply tree stored as an arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostTree {
    pub cell: CellKey,
    pub root: TreeRoot,
    nodes: Vec<TreeNode>,
}

impl PostTree {
    pub fn node(&self, idx: usize) -> &TreeNode {
        &self.nodes[idx]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root_id(&self) -> String {
        match &self.root {
            TreeRoot::Post { post_id, .. } => post_id.clone(),
            TreeRoot::Detached { missing_parent } => format!("detached:{missing_parent}"),
        }
    }

    /// Node indices in pre-order, root first.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0];
        while let Some(idx) = stack.pop() {
            out.push(idx);
            stack.extend(self.nodes[idx].children.iter().rev());
        }
        out
    }

    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((idx, d)) = stack.pop() {
            best = best.max(d);
            stack.extend(self.nodes[idx].children.iter().map(|&c| (c, d + 1)));
        }
        best
    }

    /// Post ids in pre-order, skipping a synthetic root.
    pub fn post_ids(&self) -> Vec<String> {
        self.preorder()
            .into_iter()
            .filter_map(|i| self.nodes[i].post_id.clone())
            .collect()
    }

    /// Builds a tree from explicit `(post_id, author, parent)` rows; rows
    /// must list parents before children. Mainly for tests and tools.
    pub fn from_rows(cell: CellKey, root_serp_visible: bool, rows: &[(String, String, Option<usize>)]) -> Self {
        let mut nodes: Vec<TreeNode> = rows
            .iter()
            .map(|(id, author, _)| TreeNode {
                post_id: Some(id.clone()),
                author: Some(author.clone()),
                children: Vec::new(),
            })
            .collect();
        for (idx, (_, _, parent)) in rows.iter().enumerate() {
            if let Some(p) = parent {
                nodes[*p].children.push(idx);
            }
        }
        PostTree {
            cell,
            root: TreeRoot::Post {
                post_id: rows[0].0.clone(),
                serp_visible: root_serp_visible,
            },
            nodes,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Forest {
    pub trees: Vec<PostTree>,
    pub warnings: Vec<String>,
}

fn order_key(post: &Post) -> (Option<DateTime<Utc>>, &str) {
    (post.created_at, post.id.as_str())
}

/// Arranges the selected posts into reply trees.
pub fn build_forest(corpus: &Corpus, selector: &Selector) -> Forest {
    let selected: Vec<&Post> = corpus.posts().filter(|p| selector.matches(p)).collect();
    let ids: HashSet<&str> = selected.iter().map(|p| p.id.as_str()).collect();

    let mut children: HashMap<&str, Vec<&Post>> = HashMap::new();
    let mut roots: Vec<&Post> = Vec::new();
    let mut orphans: BTreeMap<(CellKey, String), Vec<&Post>> = BTreeMap::new();
    for post in &selected {
        match post.parent_id.as_deref() {
            None => roots.push(post),
            Some(parent) if ids.contains(parent) => children.entry(parent).or_default().push(post),
            Some(parent) => orphans
                .entry((CellKey::of(post), parent.to_string()))
                .or_default()
                .push(post),
        }
    }
    for list in children.values_mut() {
        list.sort_by(|a, b| order_key(a).cmp(&order_key(b)));
    }

    let grow = |nodes: &mut Vec<TreeNode>, parent_idx: usize, kids: &[&Post]| {
        let mut stack: Vec<(usize, &Post)> = kids.iter().rev().map(|p| (parent_idx, *p)).collect();
        while let Some((parent, post)) = stack.pop() {
            let idx = nodes.len();
            nodes.push(TreeNode {
                post_id: Some(post.id.clone()),
                author: Some(post.author.clone()),
                children: Vec::new(),
            });
            nodes[parent].children.push(idx);
            if let Some(grand) = children.get(post.id.as_str()) {
                stack.extend(grand.iter().rev().map(|c| (idx, *c)));
            }
        }
    };

    roots.sort_by(|a, b| {
        CellKey::of(a)
            .cmp(&CellKey::of(b))
            .then_with(|| order_key(a).cmp(&order_key(b)))
    });

    let mut forest = Forest::default();
    for root in roots {
        let mut nodes = vec![TreeNode {
            post_id: Some(root.id.clone()),
            author: Some(root.author.clone()),
            children: Vec::new(),
        }];
        if let Some(kids) = children.get(root.id.as_str()) {
            grow(&mut nodes, 0, kids);
        }
        forest.trees.push(PostTree {
            cell: CellKey::of(root),
            root: TreeRoot::Post {
                post_id: root.id.clone(),
                serp_visible: root.serp_visible,
            },
            nodes,
        });
    }

    for ((cell, missing), mut kids) in orphans {
        kids.sort_by(|a, b| order_key(a).cmp(&order_key(b)));
        for kid in &kids {
            forest.warnings.push(format!(
                "post {} replies to {missing}, which is outside the selection; attached to a detached root",
                kid.id
            ));
        }
        let mut nodes = vec![TreeNode {
            post_id: None,
            author: None,
            children: Vec::new(),
        }];
        grow(&mut nodes, 0, &kids);
        forest.trees.push(PostTree {
            cell,
            root: TreeRoot::Detached {
                missing_parent: missing,
            },
            nodes,
        });
    }

    // Stable so roots keep their (created_at, id) order inside a cell.
    forest.trees.sort_by(|a, b| a.cell.cmp(&b.cell));
    forest
}

/// Assigns the posts of one tree to post-class groups.
pub fn classify_groups(tree: &PostTree, opts: &SegmentOptions) -> Vec<PostGroup> {
    let root_id = tree.root_id();
    let make = |class: PostClass, suffix: String, post_ids: Vec<String>, authors: BTreeSet<String>| PostGroup {
        group_id: format!("{root_id}#{suffix}"),
        post_class: class,
        post_ids,
        root_id: root_id.clone(),
        topic_id: tree.cell.topic_id.clone(),
        source: tree.cell.source.clone(),
        vertical: tree.cell.vertical.clone(),
        author_set: authors,
    };

    let order = tree.preorder();
    let all_authors: BTreeSet<String> = order.iter().filter_map(|&i| tree.node(i).author.clone()).collect();
    let mut groups = Vec::new();

    match &tree.root {
        TreeRoot::Detached { .. } => {
            let ids = tree.post_ids();
            if ids.len() >= 2 && all_authors.len() >= 2 {
                groups.push(make(PostClass::PnAn, "PnAn".into(), ids, all_authors));
            }
        }
        TreeRoot::Post { post_id, serp_visible } => {
            let root = tree.node(0);
            let root_author = root.author.clone().unwrap_or_default();
            if *serp_visible {
                groups.push(make(
                    PostClass::P1A1,
                    "P1A1".into(),
                    vec![post_id.clone()],
                    BTreeSet::from([root_author.clone()]),
                ));
            }

            // Maximal self-reply chains from the root.
            let mut chains: Vec<Vec<usize>> = Vec::new();
            let mut stack: Vec<Vec<usize>> = vec![vec![0]];
            while let Some(path) = stack.pop() {
                let last = *path.last().unwrap();
                let next: Vec<usize> = tree
                    .node(last)
                    .children
                    .iter()
                    .copied()
                    .filter(|&c| tree.node(c).author.as_deref() == Some(root_author.as_str()))
                    .collect();
                if next.is_empty() {
                    if path.len() >= 2 {
                        chains.push(path);
                    }
                    continue;
                }
                for &c in next.iter().rev() {
                    let mut longer = path.clone();
                    longer.push(c);
                    stack.push(longer);
                }
            }
            let skip = usize::from(opts.mc_exclude_root);
            for (n, chain) in chains.into_iter().enumerate() {
                let ids = chain[skip..]
                    .iter()
                    .filter_map(|&i| tree.node(i).post_id.clone())
                    .collect();
                groups.push(make(
                    PostClass::PnA1,
                    format!("PnA1.{n}"),
                    ids,
                    BTreeSet::from([root_author.clone()]),
                ));
            }

            if tree.len() >= 2 && all_authors.len() >= 2 {
                let ids = tree.post_ids().into_iter().skip(skip).collect();
                groups.push(make(PostClass::PnAn, "PnAn".into(), ids, all_authors));
            }
        }
    }
    groups
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Partition {
    pub cells: BTreeMap<(CellKey, PostClass), Vec<PostGroup>>,
    /// Every (topic, source, vertical) that had at least one selected post.
    pub keys: BTreeSet<CellKey>,
    pub warnings: Vec<String>,
}

impl Partition {
    pub fn group_count(&self, cell: &CellKey, class: PostClass) -> usize {
        self.cells.get(&(cell.clone(), class)).map_or(0, Vec::len)
    }

    pub fn post_count(&self, cell: &CellKey, class: PostClass) -> usize {
        self.cells
            .get(&(cell.clone(), class))
            .map_or(0, |gs| gs.iter().map(|g| g.post_ids.len()).sum())
    }

    pub fn groups(&self) -> impl Iterator<Item = &PostGroup> {
        self.cells.values().flatten()
    }

    /// Every base class plus the MC union, keyed by label.
    pub fn labeled(&self) -> BTreeMap<(CellKey, ClassLabel), Vec<PostGroup>> {
        let mut out: BTreeMap<(CellKey, ClassLabel), Vec<PostGroup>> = BTreeMap::new();
        for ((cell, class), groups) in &self.cells {
            out.insert((cell.clone(), (*class).into()), groups.clone());
        }
        for ((cell, label), groups) in mc_view(self) {
            if label == ClassLabel::MC {
                out.insert((cell, label), groups);
            }
        }
        out
    }
}

/// Segments the selected part of a corpus into post-class groups.
pub fn partition_corpus(corpus: &Corpus, selector: &Selector, opts: &SegmentOptions) -> Partition {
    let forest = build_forest(corpus, selector);
    let mut partition = Partition {
        warnings: forest.warnings,
        ..Partition::default()
    };
    for tree in &forest.trees {
        partition.keys.insert(tree.cell.clone());
        for group in classify_groups(tree, opts) {
            partition
                .cells
                .entry((tree.cell.clone(), group.post_class))
                .or_default()
                .push(group);
        }
    }
    partition
}

/// Merges PnA1 and PnAn cells under the MC label; other classes keep theirs.
pub fn mc_view(partition: &Partition) -> BTreeMap<(CellKey, ClassLabel), Vec<PostGroup>> {
    let mut out: BTreeMap<(CellKey, ClassLabel), Vec<PostGroup>> = BTreeMap::new();
    for ((cell, class), groups) in &partition.cells {
        if !class.is_micro_collection() {
            out.insert((cell.clone(), (*class).into()), groups.clone());
        }
    }
    for class in [PostClass::PnA1, PostClass::PnAn] {
        for ((cell, c), groups) in &partition.cells {
            if *c == class {
                out.entry((cell.clone(), ClassLabel::MC))
                    .or_default()
                    .extend(groups.iter().cloned());
            }
        }
    }
    out
}
