//! Online Sequitur grammar induction over primitive action ids.
//!
//! [`induce`] consumes the sequence one symbol at a time while maintaining
//! the two Sequitur invariants:
//!
//! * **digram uniqueness**: no ordered pair of adjacent symbols occurs twice
//!   anywhere in the grammar (overlapping occurrences such as the two pairs
//!   inside `a a a` are exempt);
//! * **rule utility**: every non-start rule is referenced at least twice.
//!
//! Rule bodies live in an arena of doubly linked nodes, each rule closed by a
//! guard node, so that substitutions and rule expansion are O(1) splices.
//! Once induction finishes the arena is frozen into a plain [`Grammar`].
//!
//! [`check_grammar`] re-derives both invariants and the round trip from the
//! frozen grammar alone and is used as an independent oracle in tests.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ActionId;

/// Identifier of a production rule. The start rule is always `R0`; auxiliary
/// rules are numbered by a monotonically increasing counter that is never
/// reused, so rule ids may have gaps after rules are inlined.
pub type RuleId = u32;

pub const START_RULE: RuleId = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    Terminal(ActionId),
    NonTerminal(RuleId),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Terminal(a) => write!(f, "{a}"),
            Symbol::NonTerminal(r) => write!(f, "R{r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub id: RuleId,
    pub rhs: Vec<Symbol>,
    pub reference_count: usize,
}

/// Location of a digram: the rule that holds it and the index of its first
/// symbol in that rule's right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigramSite {
    pub rule: RuleId,
    pub position: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("cannot induce a grammar from an empty sequence")]
    EmptySequence,
    #[error("action id {action} at position {position} is outside the alphabet of size {alphabet}")]
    SymbolOutOfRange {
        action: ActionId,
        position: usize,
        alphabet: usize,
    },
    #[error("rule R{0} is not defined in this grammar")]
    DanglingRule(RuleId),
}

/// A context-free grammar whose start rule generates exactly one sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    pub start: Rule,
    /// Auxiliary (non-start) rules keyed by id.
    pub rules: BTreeMap<RuleId, Rule>,
    pub digram_index: HashMap<(Symbol, Symbol), DigramSite>,
    pub alphabet_size: usize,
    /// Copy of the sequence the grammar was induced from; `check_grammar`
    /// compares the expansion of the start rule against it.
    pub source: Vec<ActionId>,
}

impl Grammar {
    /// Assemble a grammar from explicit rules. Reference counts are taken as
    /// given and the digram index is rebuilt from the right-hand sides.
    pub fn from_parts(
        start_rhs: Vec<Symbol>,
        rules: Vec<Rule>,
        alphabet_size: usize,
        source: Vec<ActionId>,
    ) -> Self {
        let start = Rule {
            id: START_RULE,
            rhs: start_rhs,
            reference_count: 0,
        };
        let rules: BTreeMap<RuleId, Rule> = rules.into_iter().map(|r| (r.id, r)).collect();
        let mut digram_index = HashMap::new();
        for rule in std::iter::once(&start).chain(rules.values()) {
            for (position, pair) in rule.rhs.windows(2).enumerate() {
                digram_index.entry((pair[0], pair[1])).or_insert(DigramSite {
                    rule: rule.id,
                    position,
                });
            }
        }
        Self {
            start,
            rules,
            digram_index,
            alphabet_size,
            source,
        }
    }

    pub fn rule(&self, id: RuleId) -> Option<&Rule> {
        if id == START_RULE {
            Some(&self.start)
        } else {
            self.rules.get(&id)
        }
    }

    /// Sum of right-hand-side lengths over all rules, start included.
    pub fn size(&self) -> usize {
        self.start.rhs.len() + self.rules.values().map(|r| r.rhs.len()).sum::<usize>()
    }

    /// Expansion of the start rule.
    pub fn expand_start(&self) -> Result<Vec<ActionId>, GrammarError> {
        expand(self, Symbol::NonTerminal(START_RULE))
    }

    /// Text dump, one rule per line, start rule first:
    /// `R<k> -> sym sym ...`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for rule in std::iter::once(&self.start).chain(self.rules.values()) {
            out.push_str(&format!("R{} ->", rule.id));
            for sym in &rule.rhs {
                out.push(' ');
                out.push_str(&sym.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Fully expand `symbol` to primitive action ids.
pub fn expand(grammar: &Grammar, symbol: Symbol) -> Result<Vec<ActionId>, GrammarError> {
    let mut out = Vec::new();
    let mut stack = vec![symbol];
    while let Some(sym) = stack.pop() {
        match sym {
            Symbol::Terminal(a) => out.push(a),
            Symbol::NonTerminal(id) => {
                let rule = grammar.rule(id).ok_or(GrammarError::DanglingRule(id))?;
                stack.extend(rule.rhs.iter().rev().copied());
            }
        }
    }
    Ok(out)
}

/// Run Sequitur over `sequence`. Every action id must be `< alphabet_size`.
pub fn induce(sequence: &[ActionId], alphabet_size: usize) -> Result<Grammar, GrammarError> {
    if sequence.is_empty() {
        return Err(GrammarError::EmptySequence);
    }
    if let Some((position, &action)) = sequence
        .iter()
        .enumerate()
        .find(|(_, &a)| a as usize >= alphabet_size)
    {
        return Err(GrammarError::SymbolOutOfRange {
            action,
            position,
            alphabet: alphabet_size,
        });
    }
    let mut builder = Builder::new();
    for &a in sequence {
        builder.push(a);
    }
    Ok(builder.freeze(alphabet_size, sequence.to_vec()))
}

// ---------------------------------------------------------------------------
// Arena-backed Sequitur state

type NodeId = usize;
const NIL: NodeId = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NodeKind {
    Guard(RuleId),
    Sym(Symbol),
    Dead,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    prev: NodeId,
    next: NodeId,
    kind: NodeKind,
}

#[derive(Debug, Clone, Copy)]
struct RuleSlot {
    guard: NodeId,
    uses: usize,
    live: bool,
}

struct Builder {
    nodes: Vec<Node>,
    /// Indexed by rule id.
    rules: Vec<RuleSlot>,
    digrams: HashMap<(Symbol, Symbol), NodeId>,
}

impl Builder {
    fn new() -> Self {
        let mut b = Self {
            nodes: Vec::new(),
            rules: Vec::new(),
            digrams: HashMap::new(),
        };
        b.new_rule();
        b
    }

    fn new_rule(&mut self) -> RuleId {
        let id = self.rules.len() as RuleId;
        let guard = self.nodes.len();
        self.nodes.push(Node {
            prev: guard,
            next: guard,
            kind: NodeKind::Guard(id),
        });
        self.rules.push(RuleSlot {
            guard,
            uses: 0,
            live: true,
        });
        id
    }

    fn new_symbol(&mut self, sym: Symbol) -> NodeId {
        if let Symbol::NonTerminal(r) = sym {
            self.rules[r as usize].uses += 1;
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            prev: NIL,
            next: NIL,
            kind: NodeKind::Sym(sym),
        });
        id
    }

    fn next(&self, n: NodeId) -> NodeId {
        self.nodes[n].next
    }

    fn prev(&self, n: NodeId) -> NodeId {
        self.nodes[n].prev
    }

    fn value(&self, n: NodeId) -> Option<Symbol> {
        if n == NIL {
            return None;
        }
        match self.nodes[n].kind {
            NodeKind::Sym(s) => Some(s),
            _ => None,
        }
    }

    fn is_guard(&self, n: NodeId) -> bool {
        matches!(self.nodes[n].kind, NodeKind::Guard(_))
    }

    fn first(&self, rule: RuleId) -> NodeId {
        self.next(self.rules[rule as usize].guard)
    }

    fn last(&self, rule: RuleId) -> NodeId {
        self.prev(self.rules[rule as usize].guard)
    }

    fn key(&self, n: NodeId) -> Option<(Symbol, Symbol)> {
        let next = self.next(n);
        if next == NIL {
            return None;
        }
        Some((self.value(n)?, self.value(next)?))
    }

    fn push(&mut self, action: ActionId) {
        let start_last = self.last(START_RULE);
        let node = self.new_symbol(Symbol::Terminal(action));
        self.insert_after(start_last, node);
        let before = self.prev(node);
        self.check(before);
    }

    /// Link `left -> right`, unindexing the digram that started at `left`.
    fn join(&mut self, left: NodeId, right: NodeId) {
        if self.next(left) != NIL {
            self.delete_digram(left);
            // Overlapping triples index only one of their two pairs. When
            // that pair disappears, the other one must be re-indexed.
            let (rp, rn) = (self.prev(right), self.next(right));
            if rp != NIL && rn != NIL {
                let v = self.value(right);
                if v.is_some() && v == self.value(rp) && v == self.value(rn) {
                    let k = self.key(right).expect("triple has a digram");
                    self.digrams.insert(k, right);
                }
            }
            let (lp, ln) = (self.prev(left), self.next(left));
            if lp != NIL && ln != NIL {
                let v = self.value(left);
                if v.is_some() && v == self.value(lp) && v == self.value(ln) {
                    let k = self.key(lp).expect("triple has a digram");
                    self.digrams.insert(k, lp);
                }
            }
        }
        self.nodes[left].next = right;
        self.nodes[right].prev = left;
    }

    fn insert_after(&mut self, at: NodeId, node: NodeId) {
        let after = self.next(at);
        self.join(node, after);
        self.join(at, node);
    }

    fn delete_digram(&mut self, n: NodeId) {
        if self.is_guard(n) {
            return;
        }
        let next = self.next(n);
        if next == NIL || self.is_guard(next) {
            return;
        }
        if let Some(k) = self.key(n) {
            if self.digrams.get(&k) == Some(&n) {
                self.digrams.remove(&k);
            }
        }
    }

    /// Unlink and retire a symbol node, releasing its rule reference.
    fn delete_node(&mut self, n: NodeId) {
        let (p, nx) = (self.prev(n), self.next(n));
        self.join(p, nx);
        self.delete_digram(n);
        if let NodeKind::Sym(Symbol::NonTerminal(r)) = self.nodes[n].kind {
            self.rules[r as usize].uses -= 1;
        }
        self.nodes[n].kind = NodeKind::Dead;
    }

    /// Index the digram starting at `n`, or resolve a repeat of it.
    /// Returns true when the digram was already present.
    fn check(&mut self, n: NodeId) -> bool {
        if self.is_guard(n) || self.is_guard(self.next(n)) {
            return false;
        }
        let Some(k) = self.key(n) else {
            return false;
        };
        match self.digrams.get(&k).copied() {
            None => {
                self.digrams.insert(k, n);
                false
            }
            Some(m) if m == n => false,
            Some(m) => {
                if self.next(m) != n && self.next(n) != m {
                    self.match_digram(n, m);
                }
                true
            }
        }
    }

    /// `ss` and `m` start two non-overlapping occurrences of one digram.
    fn match_digram(&mut self, ss: NodeId, m: NodeId) {
        let rule;
        if self.is_guard(self.prev(m)) && self.is_guard(self.next(self.next(m))) {
            // `m` is the entire body of an existing rule: reuse it.
            rule = match self.nodes[self.prev(m)].kind {
                NodeKind::Guard(r) => r,
                _ => unreachable!("guard node carries its rule"),
            };
            self.substitute(ss, rule);
        } else {
            rule = self.new_rule();
            let a = self.value(ss).expect("digram symbol");
            let b = self.value(self.next(ss)).expect("digram symbol");
            let na = self.new_symbol(a);
            let last = self.last(rule);
            self.insert_after(last, na);
            let nb = self.new_symbol(b);
            let last = self.last(rule);
            self.insert_after(last, nb);

            self.substitute(m, rule);
            self.substitute(ss, rule);

            let first = self.first(rule);
            let k = self.key(first).expect("fresh rule body is a digram");
            self.digrams.insert(k, first);
        }

        // Rule utility for whatever the substitutions left underused.
        if !self.rules[rule as usize].live {
            return;
        }
        let first = self.first(rule);
        if let Some(Symbol::NonTerminal(inner)) = self.value(first) {
            if self.rules[inner as usize].uses == 1 {
                self.expand(first);
            }
        }
        if !self.rules[rule as usize].live {
            return;
        }
        let last = self.last(rule);
        if let Some(Symbol::NonTerminal(inner)) = self.value(last) {
            if self.rules[inner as usize].uses == 1 {
                self.expand(last);
            }
        }
    }

    /// Replace the digram starting at `n` with a reference to `rule`.
    fn substitute(&mut self, n: NodeId, rule: RuleId) {
        let q = self.prev(n);
        let a = self.next(q);
        self.delete_node(a);
        let b = self.next(q);
        self.delete_node(b);
        let node = self.new_symbol(Symbol::NonTerminal(rule));
        self.insert_after(q, node);
        if !self.check(q) {
            let nq = self.next(q);
            self.check(nq);
        }
    }

    /// Inline the body of the rule referenced by `n`, which is its only use.
    fn expand(&mut self, n: NodeId) {
        let inner = match self.nodes[n].kind {
            NodeKind::Sym(Symbol::NonTerminal(r)) => r,
            _ => unreachable!("expand on a nonterminal"),
        };
        let left = self.prev(n);
        let right = self.next(n);
        let f = self.first(inner);
        let l = self.last(inner);

        let guard = self.rules[inner as usize].guard;
        self.nodes[guard].kind = NodeKind::Dead;
        self.rules[inner as usize].live = false;
        self.rules[inner as usize].uses = 0;

        if let Some(k) = self.key(n) {
            if self.digrams.get(&k) == Some(&n) {
                self.digrams.remove(&k);
            }
        }
        // Retire `n` without touching the (already retired) rule's counter.
        self.join(left, right);
        self.nodes[n].kind = NodeKind::Dead;

        self.join(left, f);
        self.join(l, right);

        if let Some(k) = self.key(l) {
            if !self.is_guard(right) {
                self.digrams.insert(k, l);
            }
        }
        if let Some(k) = self.key(left) {
            if !self.is_guard(left) {
                self.digrams.insert(k, left);
            }
        }
    }

    fn rule_body(&self, rule: RuleId) -> Vec<(NodeId, Symbol)> {
        let guard = self.rules[rule as usize].guard;
        let mut out = Vec::new();
        let mut cur = self.next(guard);
        while cur != guard {
            out.push((cur, self.value(cur).expect("rule body holds symbols")));
            cur = self.next(cur);
        }
        out
    }

    fn freeze(self, alphabet_size: usize, source: Vec<ActionId>) -> Grammar {
        let mut located: HashMap<NodeId, DigramSite> = HashMap::new();
        let mut start = None;
        let mut rules = BTreeMap::new();
        for (id, slot) in self.rules.iter().enumerate() {
            if !slot.live {
                continue;
            }
            let id = id as RuleId;
            let body = self.rule_body(id);
            for (position, &(node, _)) in body.iter().enumerate() {
                located.insert(node, DigramSite { rule: id, position });
            }
            let rule = Rule {
                id,
                rhs: body.into_iter().map(|(_, s)| s).collect(),
                reference_count: slot.uses,
            };
            if id == START_RULE {
                start = Some(rule);
            } else {
                rules.insert(id, rule);
            }
        }
        let digram_index = self
            .digrams
            .iter()
            .filter_map(|(&k, n)| located.get(n).map(|&site| (k, site)))
            .collect();
        Grammar {
            start: start.expect("start rule is never retired"),
            rules,
            digram_index,
            alphabet_size,
            source,
        }
    }
}

// ---------------------------------------------------------------------------
// Independent invariant checker

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// A digram occurs at two or more non-overlapping places.
    DuplicateDigram {
        digram: (Symbol, Symbol),
        sites: Vec<DigramSite>,
    },
    /// A non-start rule is referenced fewer than two times.
    Underused { rule: RuleId, references: usize },
    /// A non-start rule has a right-hand side shorter than two symbols.
    ShortRule { rule: RuleId, len: usize },
    /// The stored reference count disagrees with the actual count.
    CountMismatch {
        rule: RuleId,
        stored: usize,
        actual: usize,
    },
    DanglingRule(RuleId),
    TerminalOutOfRange(ActionId),
    /// The start rule does not expand to the stored source sequence.
    RoundTrip { first_mismatch: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GrammarReport {
    pub violations: Vec<Violation>,
}

impl GrammarReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Re-derive digram uniqueness, rule utility and the round trip from the
/// grammar's right-hand sides. Stored reference counts and the stored digram
/// index are not trusted.
pub fn check_grammar(grammar: &Grammar) -> GrammarReport {
    let mut violations = Vec::new();
    let all: Vec<&Rule> = std::iter::once(&grammar.start)
        .chain(grammar.rules.values())
        .collect();

    let mut actual: BTreeMap<RuleId, usize> = grammar.rules.keys().map(|&k| (k, 0)).collect();
    let mut dangling = Vec::new();
    for rule in &all {
        for sym in &rule.rhs {
            match *sym {
                Symbol::NonTerminal(r) => match actual.get_mut(&r) {
                    Some(c) => *c += 1,
                    None => dangling.push(r),
                },
                Symbol::Terminal(a) => {
                    if a as usize >= grammar.alphabet_size {
                        violations.push(Violation::TerminalOutOfRange(a));
                    }
                }
            }
        }
    }
    dangling.sort_unstable();
    dangling.dedup();
    violations.extend(dangling.into_iter().map(Violation::DanglingRule));

    for rule in grammar.rules.values() {
        let refs = actual[&rule.id];
        if refs < 2 {
            violations.push(Violation::Underused {
                rule: rule.id,
                references: refs,
            });
        }
        if refs != rule.reference_count {
            violations.push(Violation::CountMismatch {
                rule: rule.id,
                stored: rule.reference_count,
                actual: refs,
            });
        }
        if rule.rhs.len() < 2 {
            violations.push(Violation::ShortRule {
                rule: rule.id,
                len: rule.rhs.len(),
            });
        }
    }

    // Greedy non-overlapping occurrences per rule, pooled across rules.
    let mut sites: BTreeMap<(Symbol, Symbol), Vec<DigramSite>> = BTreeMap::new();
    for rule in &all {
        let mut last_taken: HashMap<(Symbol, Symbol), usize> = HashMap::new();
        for (position, pair) in rule.rhs.windows(2).enumerate() {
            let k = (pair[0], pair[1]);
            if let Some(&prev) = last_taken.get(&k) {
                if prev + 1 == position {
                    continue;
                }
            }
            last_taken.insert(k, position);
            sites.entry(k).or_default().push(DigramSite {
                rule: rule.id,
                position,
            });
        }
    }
    for (digram, sites) in sites {
        if sites.len() > 1 {
            violations.push(Violation::DuplicateDigram { digram, sites });
        }
    }

    if !violations
        .iter()
        .any(|v| matches!(v, Violation::DanglingRule(_)))
    {
        match grammar.expand_start() {
            Ok(seq) if seq == grammar.source => {}
            Ok(seq) => {
                let first_mismatch = seq
                    .iter()
                    .zip(&grammar.source)
                    .position(|(a, b)| a != b)
                    .unwrap_or(seq.len().min(grammar.source.len()));
                violations.push(Violation::RoundTrip { first_mismatch });
            }
            Err(GrammarError::DanglingRule(r)) => violations.push(Violation::DanglingRule(r)),
            Err(_) => unreachable!("expand only reports dangling rules"),
        }
    }

    GrammarReport { violations }
}
