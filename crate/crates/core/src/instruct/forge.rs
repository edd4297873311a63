use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::{InstructError, Instruction, PromptPool, TaskKind};
use crate::graph::TextAttributedGraph;
use crate::seed::rng_for;
use crate::vocab::{NodeRef, Vocabulary};

/// Most IDs listed per hop in a task prompt.
pub const DEFAULT_CONTEXT_CAP: usize = 10;

/// Node ids around a center, each list sorted by node id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Context {
    pub one_hop: Vec<String>,
    pub two_hop: Vec<String>,
}

/// Renders instructions for one graph.
pub struct Forge<'a> {
    graph: &'a TextAttributedGraph,
    vocab: &'a Vocabulary,
    pool: &'a PromptPool,
    context_cap: usize,
    fixed_variant: Option<usize>,
}

impl<'a> Forge<'a> {
    pub fn new(graph: &'a TextAttributedGraph, vocab: &'a Vocabulary, pool: &'a PromptPool) -> Self {
        Self {
            graph,
            vocab,
            pool,
            context_cap: DEFAULT_CONTEXT_CAP,
            fixed_variant: None,
        }
    }

    pub fn with_context_cap(mut self, cap: usize) -> Self {
        self.context_cap = cap;
        self
    }

    /// Always use this pool variant instead of a seeded choice.
    pub fn with_variant(mut self, variant: Option<usize>) -> Self {
        self.fixed_variant = variant;
        self
    }

    pub fn graph(&self) -> &TextAttributedGraph {
        self.graph
    }

    fn id(&self, node_id: &str) -> Result<String, InstructError> {
        self.graph.node(node_id)?;
        self.vocab
            .rendered(self.graph.graph_id(), node_id)
            .ok_or_else(|| InstructError::MissingId(NodeRef::new(self.graph.graph_id(), node_id)))
    }

    fn id_list(&self, nodes: &[String]) -> Result<String, InstructError> {
        let ids = nodes.iter().map(|n| self.id(n)).collect::<Result<Vec<_>, _>>()?;
        Ok(ids.join(", "))
    }

    fn capped(&self, nodes: BTreeSet<&str>, seed: u64, parts: &[&str]) -> Vec<String> {
        let nodes: Vec<&str> = nodes.into_iter().collect();
        if nodes.len() <= self.context_cap {
            return nodes.into_iter().map(str::to_owned).collect();
        }
        let mut keep = index::sample(&mut rng_for(seed, parts), nodes.len(), self.context_cap).into_vec();
        keep.sort_unstable();
        keep.into_iter().map(|i| nodes[i].to_owned()).collect()
    }

    /// 1-hop and 2-hop nodes of `center`. With `excluded`, the edge to it is
    /// treated as absent and it is left out of both lists.
    pub fn context(&self, center: &str, excluded: Option<&str>, seed: u64) -> Result<Context, InstructError> {
        let one: BTreeSet<&str> = self
            .graph
            .adjacent(center)?
            .into_iter()
            .filter(|n| Some(*n) != excluded)
            .collect();
        let mut two = BTreeSet::new();
        for n in &one {
            for m in self.graph.adjacent(n)? {
                if m != center && !one.contains(m) && Some(m) != excluded {
                    two.insert(m);
                }
            }
        }
        let g = self.graph.graph_id();
        Ok(Context {
            one_hop: self.capped(one, seed, &["context", g, center, "1"]),
            two_hop: self.capped(two, seed, &["context", g, center, "2"]),
        })
    }

    fn variant(&self, task: TaskKind, center: &str, seed: u64) -> usize {
        self.fixed_variant.unwrap_or_else(|| {
            rng_for(seed, &["variant", task.as_str(), self.graph.graph_id(), center]).gen_range(0..self.pool.len(task))
        })
    }

    fn finish(
        &self,
        task: TaskKind,
        center: &str,
        target: String,
        seed: u64,
        values: &[(&str, &str)],
    ) -> Result<Instruction, InstructError> {
        let variant = self.variant(task, center, seed);
        let template = self
            .pool
            .get(task, variant)
            .ok_or_else(|| InstructError::Pool(format!("{task} has no variant {variant}")))?;
        let text = template.render(values).map_err(|e| InstructError::Pool(e.to_string()))?;
        Ok(Instruction {
            text,
            target,
            task,
            graph_id: self.graph.graph_id().to_owned(),
            center: center.to_owned(),
            variant,
        })
    }

    fn structural(
        &self,
        task: TaskKind,
        center: &str,
        excluded: Option<&str>,
        target: String,
        extra: &[(&str, &str)],
        seed: u64,
    ) -> Result<Instruction, InstructError> {
        let ctx = self.context(center, excluded, seed)?;
        let center_id = self.id(center)?;
        let one = self.id_list(&ctx.one_hop)?;
        let two = self.id_list(&ctx.two_hop)?;
        let mut values = vec![("center", center_id.as_str()), ("1hop", one.as_str()), ("2hop", two.as_str())];
        values.extend_from_slice(extra);
        self.finish(task, center, target, seed, &values)
    }

    /// Target is the bare class name.
    pub fn node_classification(&self, center: &str, seed: u64) -> Result<Instruction, InstructError> {
        let label = self
            .graph
            .node(center)?
            .label
            .clone()
            .ok_or_else(|| InstructError::MissingLabel(center.to_owned()))?;
        self.structural(TaskKind::NodeClassification, center, None, label, &[], seed)
    }

    /// The edge `center`–`target` is held out of the context.
    pub fn generative_lp(&self, center: &str, target: &str, seed: u64) -> Result<Instruction, InstructError> {
        if !self.graph.has_edge(center, target) {
            return Err(InstructError::NoHeldOutEdge {
                center: center.to_owned(),
                target: target.to_owned(),
            });
        }
        let id = self.id(target)?;
        self.structural(TaskKind::GenerativeLp, center, Some(target), id, &[], seed)
    }

    /// Candidates appear in seeded order; the target is the positive's ID.
    pub fn discriminative_lp(
        &self,
        center: &str,
        positive: &str,
        negative: &str,
        seed: u64,
    ) -> Result<Instruction, InstructError> {
        if !self.graph.has_edge(center, positive) {
            return Err(InstructError::NoHeldOutEdge {
                center: center.to_owned(),
                target: positive.to_owned(),
            });
        }
        if negative == center || negative == positive || self.graph.has_edge(center, negative) {
            return Err(InstructError::InvalidNegative {
                center: center.to_owned(),
                negative: negative.to_owned(),
            });
        }
        let pos = self.id(positive)?;
        let neg = self.id(negative)?;
        let mut cands = [pos.clone(), neg];
        if rng_for(seed, &["dlp_order", self.graph.graph_id(), center]).gen_bool(0.5) {
            cands.swap(0, 1);
        }
        let extra = [("cand_a", cands[0].as_str()), ("cand_b", cands[1].as_str())];
        self.structural(TaskKind::DiscriminativeLp, center, Some(positive), pos, &extra, seed)
    }

    /// Two nodes of one class and one of another, in seeded order.
    pub fn make_nd(&self, seed: u64) -> Result<Instruction, InstructError> {
        let mut classes: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for n in self.graph.labeled_nodes() {
            classes
                .entry(n.label.as_deref().expect("labeled"))
                .or_default()
                .push(&n.node_id);
        }
        let majority: Vec<&str> = classes.iter().filter(|(_, m)| m.len() >= 2).map(|(c, _)| *c).collect();
        if classes.len() < 2 || majority.is_empty() {
            return Err(InstructError::InsufficientClasses);
        }
        let mut rng = rng_for(seed, &["nd", self.graph.graph_id()]);
        let x = majority[rng.gen_range(0..majority.len())];
        let pair = index::sample(&mut rng, classes[x].len(), 2);
        let others: Vec<&str> = classes.keys().copied().filter(|c| *c != x).collect();
        let y = others[rng.gen_range(0..others.len())];
        let odd = classes[y][rng.gen_range(0..classes[y].len())];
        let mut triple = [classes[x][pair.index(0)], classes[x][pair.index(1)], odd];
        triple.shuffle(&mut rng);
        let ids = triple.iter().map(|n| self.id(n)).collect::<Result<Vec<_>, _>>()?;
        let values = [("a", ids[0].as_str()), ("b", ids[1].as_str()), ("c", ids[2].as_str())];
        self.finish(TaskKind::NodeDiscrimination, odd, self.id(odd)?, seed, &values)
    }

    /// A center with two neighbors and one non-neighbor, in seeded order.
    pub fn make_ld(&self, seed: u64) -> Result<Instruction, InstructError> {
        let n = self.graph.node_count();
        let eligible: Vec<&str> = self
            .graph
            .nodes()
            .iter()
            .map(|r| r.node_id.as_str())
            .filter(|id| self.graph.degree(id).is_ok_and(|d| d >= 2 && d + 1 < n))
            .collect();
        if eligible.is_empty() {
            return Err(InstructError::NoValidConfiguration);
        }
        let mut rng = rng_for(seed, &["ld", self.graph.graph_id()]);
        let center = eligible[rng.gen_range(0..eligible.len())];
        let nbrs = self.graph.adjacent(center)?;
        let pair = index::sample(&mut rng, nbrs.len(), 2);
        let strangers: Vec<&str> = self
            .graph
            .nodes()
            .iter()
            .map(|r| r.node_id.as_str())
            .filter(|id| *id != center && !self.graph.has_edge(center, id))
            .collect();
        let stranger = strangers[rng.gen_range(0..strangers.len())];
        let mut cands = [nbrs[pair.index(0)], nbrs[pair.index(1)], stranger];
        cands.shuffle(&mut rng);
        let ids = cands.iter().map(|n| self.id(n)).collect::<Result<Vec<_>, _>>()?;
        let center_id = self.id(center)?;
        let values = [
            ("center", center_id.as_str()),
            ("a", ids[0].as_str()),
            ("b", ids[1].as_str()),
            ("c", ids[2].as_str()),
        ];
        self.finish(TaskKind::LinkDiscrimination, center, self.id(stranger)?, seed, &values)
    }

    /// An instruction of `task` on a seeded random configuration.
    pub fn sample(&self, task: TaskKind, seed: u64) -> Result<Instruction, InstructError> {
        let g = self.graph.graph_id();
        let mut rng = rng_for(seed, &["sample", task.as_str(), g]);
        match task {
            TaskKind::NodeClassification => {
                let labeled: Vec<&str> = self.graph.labeled_nodes().map(|n| n.node_id.as_str()).collect();
                if labeled.is_empty() {
                    return Err(InstructError::NoCandidates(g.to_owned()));
                }
                self.node_classification(labeled[rng.gen_range(0..labeled.len())], seed)
            }
            TaskKind::GenerativeLp | TaskKind::DiscriminativeLp => {
                let edges: Vec<_> = self.graph.edges().iter().collect();
                if edges.is_empty() {
                    return Err(InstructError::NoCandidates(g.to_owned()));
                }
                let (a, b) = edges[rng.gen_range(0..edges.len())].endpoints();
                let (center, other) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
                if task == TaskKind::GenerativeLp {
                    return self.generative_lp(center, other, seed);
                }
                let strangers: Vec<&str> = self
                    .graph
                    .nodes()
                    .iter()
                    .map(|r| r.node_id.as_str())
                    .filter(|id| *id != center && !self.graph.has_edge(center, id))
                    .collect();
                if strangers.is_empty() {
                    return Err(InstructError::NoCandidates(center.to_owned()));
                }
                let negative = strangers[rng.gen_range(0..strangers.len())];
                self.discriminative_lp(center, other, negative, seed)
            }
            TaskKind::NodeDiscrimination => self.make_nd(seed),
            TaskKind::LinkDiscrimination => self.make_ld(seed),
        }
    }
}
