//! Finite prefixes of inverse sequences `B_1 <- B_2 <- ... <- B_d`: age
//! chains, generic sequences built by task discharge, extension
//! certificates and the back-and-forth tower between two sequences.
//!
//! Levels are numbered from 1. `bond(i)` maps `B_{i+1}` onto `B_i`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::class::{amalgam_witness, joint_witness, StructureClass};
use crate::epi::{enumerate_epimorphisms, find_lift, is_epimorphism, refine_maps};
use crate::error::LimitError;
use crate::format::join;
use crate::model::{FiniteStructure, SurjectiveMap, SymbolKind};
use crate::report::{index_key, Report};
use crate::rng::SplitMix64;

/// An extension task: given `g: B_level -> A` and `f: B -> A`, find a level
/// `j >= level` and `h: B_j -> B` with `f ∘ h = g ∘ π_{j,level}`. `a` and `b`
/// index class members.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Task {
    pub level: usize,
    pub a: usize,
    pub b: usize,
    pub f: SurjectiveMap,
    pub g: SurjectiveMap,
}

fn dotted(m: &SurjectiveMap) -> String {
    m.table().iter().map(|x| x.to_string()).collect::<Vec<_>>().join(".")
}

fn parse_dotted(s: &str, target: usize) -> Option<SurjectiveMap> {
    let table = s.split('.').map(|t| t.parse().ok()).collect::<Option<Vec<usize>>>()?;
    SurjectiveMap::new(table, target).ok()
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}/A{}/B{}/f{}/g{}", self.level, self.a, self.b, dotted(&self.f), dotted(&self.g))
    }
}

impl FromStr for Task {
    type Err = String;

    /// Target sizes are recovered as `max + 1`, which is exact for
    /// surjections.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("malformed task id `{s}`");
        let parts: Vec<&str> = s.split('/').collect();
        let [l, a, b, f, g] = parts.as_slice() else { return Err(bad()) };
        let num = |p: &str, tag: char| p.strip_prefix(tag).and_then(|x| x.parse::<usize>().ok());
        let map = |p: &str, tag: char| {
            let body = p.strip_prefix(tag)?;
            let max = body.split('.').filter_map(|t| t.parse::<usize>().ok()).max()?;
            parse_dotted(body, max + 1)
        };
        Ok(Task {
            level: num(l, 'L').ok_or_else(bad)?,
            a: num(a, 'A').ok_or_else(bad)?,
            b: num(b, 'B').ok_or_else(bad)?,
            f: map(f, 'f').ok_or_else(bad)?,
            g: map(g, 'g').ok_or_else(bad)?,
        })
    }
}

/// One line of the construction log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// `B_1` is class member `member`.
    Start {
        member: usize,
    },
    /// `B_level` is member `via`, chosen to map onto member `member`.
    Jsp {
        level: usize,
        member: usize,
        via: usize,
        onto: SurjectiveMap,
    },
    /// `B_level` is member `via`, an amalgam discharging `task` with
    /// `witness: B_level -> B`.
    Discharge {
        level: usize,
        task: Task,
        via: usize,
        witness: SurjectiveMap,
    },
    /// `task` was already fulfilled at an existing level.
    Searched {
        level: usize,
        task: Task,
        witness: SurjectiveMap,
    },
    /// The task queue ran dry when the prefix had `level` levels.
    Exhausted {
        level: usize,
    },
    Note(String),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Start { member } => write!(f, "start member={member}"),
            Provenance::Jsp { level, member, via, onto } => {
                write!(f, "jsp level={level} member={member} via={via} onto={}", dotted(onto))
            }
            Provenance::Discharge { level, task, via, witness } => {
                write!(f, "discharge level={level} task={task} via={via} witness={}", dotted(witness))
            }
            Provenance::Searched { level, task, witness } => {
                write!(f, "searched level={level} task={task} witness={}", dotted(witness))
            }
            Provenance::Exhausted { level } => write!(f, "exhausted level={level}"),
            Provenance::Note(text) => write!(f, "note {text}"),
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let line = line.trim();
        if let Some(text) = line.strip_prefix("note ") {
            return Ok(Provenance::Note(text.to_string()));
        }
        let bad = || format!("malformed provenance line `{line}`");
        let mut words = line.split_whitespace();
        let kind = words.next().ok_or_else(bad)?;
        let fields: Vec<(&str, &str)> = words.map(|w| w.split_once('=').ok_or_else(bad)).collect::<Result<_, _>>()?;
        let get = |k: &str| fields.iter().find(|(key, _)| *key == k).map(|(_, v)| *v).ok_or_else(bad);
        let num = |k: &str| get(k).and_then(|v| v.parse::<usize>().map_err(|_| bad()));
        let map = |k: &str| {
            get(k).and_then(|v| {
                let max = v.split('.').filter_map(|t| t.parse::<usize>().ok()).max().ok_or_else(bad)?;
                parse_dotted(v, max + 1).ok_or_else(bad)
            })
        };
        let task = || get("task").and_then(|v| v.parse::<Task>());
        Ok(match kind {
            "start" => Provenance::Start { member: num("member")? },
            "jsp" => {
                Provenance::Jsp { level: num("level")?, member: num("member")?, via: num("via")?, onto: map("onto")? }
            }
            "discharge" => Provenance::Discharge {
                level: num("level")?,
                task: task()?,
                via: num("via")?,
                witness: map("witness")?,
            },
            "searched" => Provenance::Searched { level: num("level")?, task: task()?, witness: map("witness")? },
            "exhausted" => Provenance::Exhausted { level: num("level")? },
            _ => return Err(bad()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InverseSystem {
    levels: Vec<FiniteStructure>,
    bonds: Vec<SurjectiveMap>,
    provenance: Vec<Provenance>,
}

/// A point of the prefix: one coordinate per level, compatible with bonds.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Thread {
    pub coordinates: Vec<usize>,
}

impl InverseSystem {
    /// Checks that every bond is an epimorphism between consecutive levels.
    pub fn new(
        levels: Vec<FiniteStructure>,
        bonds: Vec<SurjectiveMap>,
        provenance: Vec<Provenance>,
    ) -> Result<Self, LimitError> {
        let sys = InverseSystem { levels, bonds, provenance };
        sys.validate()?;
        Ok(sys)
    }

    /// No checks; for diagnostics on possibly broken systems.
    pub fn new_unchecked(levels: Vec<FiniteStructure>, bonds: Vec<SurjectiveMap>, provenance: Vec<Provenance>) -> Self {
        InverseSystem { levels, bonds, provenance }
    }

    pub fn validate(&self) -> Result<(), LimitError> {
        if self.levels.is_empty() {
            return Err(LimitError::ZeroDepth);
        }
        if self.bonds.len() + 1 != self.levels.len() {
            return Err(LimitError::InvalidSystem(format!(
                "{} levels need {} bonds, found {}",
                self.levels.len(),
                self.levels.len() - 1,
                self.bonds.len()
            )));
        }
        for (i, bond) in self.bonds.iter().enumerate() {
            let ok = is_epimorphism(bond, &self.levels[i + 1], &self.levels[i])
                .map_err(|e| LimitError::InvalidSystem(format!("bond {}: {e}", i + 1)))?;
            if !ok {
                return Err(LimitError::InvalidSystem(format!("bond {} is not an epimorphism", i + 1)));
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// `B_i`, for `1 <= i <= depth`.
    pub fn level(&self, i: usize) -> &FiniteStructure {
        &self.levels[i - 1]
    }

    pub fn levels(&self) -> &[FiniteStructure] {
        &self.levels
    }

    /// `π_i: B_{i+1} -> B_i`, for `1 <= i < depth`.
    pub fn bond(&self, i: usize) -> &SurjectiveMap {
        &self.bonds[i - 1]
    }

    pub fn bonds(&self) -> &[SurjectiveMap] {
        &self.bonds
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    fn check_level(&self, i: usize) -> Result<(), LimitError> {
        if i == 0 || i > self.depth() {
            return Err(LimitError::LevelOutOfRange { level: i, depth: self.depth() });
        }
        Ok(())
    }

    /// `π_{j,i} = π_i ∘ ... ∘ π_{j-1}: B_j -> B_i` for `j >= i`.
    pub fn projection(&self, j: usize, i: usize) -> Result<SurjectiveMap, LimitError> {
        self.check_level(j)?;
        self.check_level(i)?;
        if j < i {
            return Err(LimitError::LevelOutOfRange { level: i, depth: j });
        }
        Ok((i..j).rev().fold(SurjectiveMap::identity(self.level(j).size()), |m, k| m.then(self.bond(k))))
    }

    /// One thread per point of the top level.
    pub fn threads(&self) -> Vec<Thread> {
        let d = self.depth();
        (0..self.level(d).size())
            .map(|x| {
                let mut coordinates = vec![0; d];
                coordinates[d - 1] = x;
                for i in (1..d).rev() {
                    coordinates[i - 1] = self.bond(i).apply(coordinates[i]);
                }
                Thread { coordinates }
            })
            .collect()
    }

    pub fn is_thread(&self, t: &Thread) -> bool {
        t.coordinates.len() == self.depth()
            && t.coordinates.iter().zip(&self.levels).all(|(&c, l)| c < l.size())
            && (1..self.depth()).all(|i| self.bond(i).apply(t.coordinates[i]) == t.coordinates[i - 1])
    }

    pub fn summary(&self) -> Report {
        let mut r = Report::new();
        r.set("depth", self.depth());
        let sizes: Vec<String> = self.levels.iter().map(|l| l.size().to_string()).collect();
        r.set("level_sizes", sizes.join(" "));
        r.set("provenance_lines", self.provenance.len());
        r
    }
}

/// `B_1` is the first member; `B_{i+1}` is the first member mapping onto
/// both the next member (cyclically) and `B_i`.
pub fn build_age_chain(cls: &StructureClass, depth: usize) -> Result<InverseSystem, LimitError> {
    if depth == 0 {
        return Err(LimitError::ZeroDepth);
    }
    let mut levels = vec![cls.member(0).clone()];
    let mut bonds = Vec::new();
    let mut log = vec![Provenance::Start { member: 0 }];
    for next in 1..depth {
        let member = next % cls.len();
        let top = levels.last().expect("nonempty");
        let (via, onto, bond) = joint_witness(cls, cls.member(member), top).ok_or_else(|| LimitError::Bounded {
            task: format!("joint witness for member {member} and level {next}"),
            max_size: cls.max_size(),
        })?;
        levels.push(cls.member(via).clone());
        bonds.push(bond);
        log.push(Provenance::Jsp { level: next + 1, member, via, onto });
    }
    InverseSystem::new(levels, bonds, log)
}

/// Tasks whose `g` does not factor through the previous level, for class
/// members of size at most `task_bound`, in canonical order.
pub fn native_tasks(sys: &InverseSystem, cls: &StructureClass, level: usize, task_bound: usize) -> Vec<Task> {
    let bi = sys.level(level);
    let small: Vec<usize> = cls.indices_up_to(task_bound).collect();
    let mut tasks = Vec::new();
    for &a in &small {
        let am = cls.member(a);
        let gs: Vec<SurjectiveMap> = enumerate_epimorphisms(bi, am)
            .unwrap_or_default()
            .into_iter()
            .filter(|g| {
                level == 1
                    || !sys
                        .bond(level - 1)
                        .fibers()
                        .iter()
                        .all(|fib| fib.iter().all(|&x| g.apply(x) == g.apply(fib[0])))
            })
            .collect();
        if gs.is_empty() {
            continue;
        }
        for &b in &small {
            let fs = enumerate_epimorphisms(cls.member(b), am).unwrap_or_default();
            for f in &fs {
                for g in &gs {
                    tasks.push(Task { level, a, b, f: f.clone(), g: g.clone() });
                }
            }
        }
    }
    tasks.sort_by(|x, y| task_order(cls, x).cmp(&task_order(cls, y)));
    tasks
}

type TaskKey<'a> = (usize, usize, usize, usize, usize, &'a [usize], &'a [usize]);

fn task_order<'a>(cls: &StructureClass, t: &'a Task) -> TaskKey<'a> {
    (t.level, cls.member(t.a).size(), cls.member(t.b).size(), t.a, t.b, t.f.table(), t.g.table())
}

/// The first `(j, h)` with `i <= j <= depth` and `f ∘ h = g ∘ π_{j,i}`.
pub fn fulfill(sys: &InverseSystem, cls: &StructureClass, task: &Task) -> Option<(usize, SurjectiveMap)> {
    let b = cls.member(task.b);
    (task.level..=sys.depth()).find_map(|j| {
        let target = sys.projection(j, task.level).ok()?.then(&task.g);
        find_lift(sys.level(j), b, &task.f, &target).ok().flatten().map(|h| (j, h))
    })
}

/// Exact re-check of a claimed fulfillment.
pub fn check_fulfillment(sys: &InverseSystem, cls: &StructureClass, task: &Task, j: usize, h: &SurjectiveMap) -> bool {
    if task.level == 0 || j < task.level || j > sys.depth() || task.a >= cls.len() || task.b >= cls.len() {
        return false;
    }
    let (a, b) = (cls.member(task.a), cls.member(task.b));
    let shapes = task.g.source_size() == sys.level(task.level).size()
        && task.g.target_size() == a.size()
        && task.f.source_size() == b.size()
        && task.f.target_size() == a.size()
        && h.source_size() == sys.level(j).size()
        && h.target_size() == b.size();
    if !shapes {
        return false;
    }
    let epis = is_epimorphism(&task.g, sys.level(task.level), a).unwrap_or(false)
        && is_epimorphism(&task.f, b, a).unwrap_or(false)
        && is_epimorphism(h, sys.level(j), b).unwrap_or(false);
    epis && h.then(&task.f) == sys.projection(j, task.level).expect("checked range").then(&task.g)
}

/// Builds a prefix of a generic sequence.
///
/// Tasks are queued level by level as levels appear, ordered by
/// `(level, |A|, |B|, a, b, f, g)`; within each `(level, |A|, |B|)` band the
/// order is shuffled by SplitMix64 seeded with `seed`. The front task is
/// dropped (and logged) when some existing level already fulfills it;
/// otherwise the first amalgam `D` of `B_top` and `B` over `A` becomes the
/// next level, and the tasks native to it join the queue.
///
/// When the queue runs dry, JSP steps towards the next class member
/// (cyclically) continue the chain.
pub fn build_generic_sequence(
    cls: &StructureClass,
    depth: usize,
    task_bound: usize,
    seed: u64,
) -> Result<InverseSystem, LimitError> {
    if depth == 0 {
        return Err(LimitError::ZeroDepth);
    }
    let mut rng = SplitMix64::new(seed);
    let mut sys =
        InverseSystem::new_unchecked(vec![cls.member(0).clone()], Vec::new(), vec![Provenance::Start { member: 0 }]);
    let mut queue: VecDeque<Task> = VecDeque::new();
    let mut next_member = 1 % cls.len();
    enqueue(&mut queue, &sys, cls, 1, task_bound, &mut rng);

    while sys.depth() < depth {
        let Some(task) = queue.pop_front() else {
            sys.provenance.push(Provenance::Exhausted { level: sys.depth() });
            jsp_step(&mut sys, cls, next_member)?;
            next_member = (next_member + 1) % cls.len();
            enqueue(&mut queue, &sys, cls, sys.depth(), task_bound, &mut rng);
            continue;
        };
        if let Some((level, witness)) = fulfill(&sys, cls, &task) {
            sys.provenance.push(Provenance::Searched { level, task, witness });
            continue;
        }
        let top = sys.depth();
        let through = sys.projection(top, task.level).expect("in range").then(&task.g);
        let (via, bond, witness) = amalgam_witness(cls, sys.level(top), cls.member(task.b), &through, &task.f)
            .ok_or_else(|| LimitError::Bounded { task: task.to_string(), max_size: cls.max_size() })?;
        sys.levels.push(cls.member(via).clone());
        sys.bonds.push(bond);
        sys.provenance.push(Provenance::Discharge { level: top + 1, task, via, witness });
        enqueue(&mut queue, &sys, cls, top + 1, task_bound, &mut rng);
    }
    sys.validate()?;
    Ok(sys)
}

fn jsp_step(sys: &mut InverseSystem, cls: &StructureClass, member: usize) -> Result<(), LimitError> {
    let top = sys.depth();
    let (via, onto, bond) =
        joint_witness(cls, cls.member(member), sys.level(top)).ok_or_else(|| LimitError::Bounded {
            task: format!("joint witness for member {member} and level {top}"),
            max_size: cls.max_size(),
        })?;
    sys.levels.push(cls.member(via).clone());
    sys.bonds.push(bond);
    sys.provenance.push(Provenance::Jsp { level: top + 1, member, via, onto });
    Ok(())
}

fn enqueue(
    queue: &mut VecDeque<Task>,
    sys: &InverseSystem,
    cls: &StructureClass,
    level: usize,
    task_bound: usize,
    rng: &mut SplitMix64,
) {
    let tasks = native_tasks(sys, cls, level, task_bound);
    let mut start = 0;
    while start < tasks.len() {
        let band = |t: &Task| (cls.member(t.a).size(), cls.member(t.b).size());
        let key = band(&tasks[start]);
        let end = start + tasks[start..].iter().take_while(|t| band(t) == key).count();
        let mut chunk = tasks[start..end].to_vec();
        rng.shuffle(&mut chunk);
        queue.extend(chunk);
        start = end;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Fulfilled { level: usize, h: SurjectiveMap },
    Unfulfilled,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Fulfilled { level, h } => write!(f, "level {level} h {h}"),
            Verdict::Unfulfilled => f.write_str("unfulfilled within depth"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionCertificate {
    pub depth: usize,
    pub task_bound: usize,
    /// Every native task of size at most `task_bound`, in canonical order.
    pub verdicts: Vec<(Task, Verdict)>,
    /// Tasks named in the construction log, with whether their logged
    /// witness re-checks.
    pub logged: Vec<(Task, bool)>,
}

impl ExtensionCertificate {
    pub fn unfulfilled(&self) -> usize {
        self.verdicts.iter().filter(|(_, v)| *v == Verdict::Unfulfilled).count()
    }

    pub fn fulfilled(&self) -> usize {
        self.verdicts.len() - self.unfulfilled()
    }

    /// Every fulfilled verdict re-checks exactly against `sys`.
    pub fn recheck(&self, sys: &InverseSystem, cls: &StructureClass) -> bool {
        self.verdicts.par_iter().all(|(t, v)| match v {
            Verdict::Fulfilled { level, h } => check_fulfillment(sys, cls, t, *level, h),
            Verdict::Unfulfilled => true,
        })
    }

    /// Every logged task is fulfilled with a witness that re-checks.
    pub fn logged_ok(&self) -> bool {
        self.logged.iter().all(|(_, ok)| *ok)
    }

    /// Tasks native to the top level have no later level to be fulfilled
    /// at; unfulfilled tasks below the top are the informative ones.
    pub fn unfulfilled_below_top(&self) -> usize {
        self.verdicts.iter().filter(|(t, v)| *v == Verdict::Unfulfilled && t.level < self.depth).count()
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new();
        r.set("depth", self.depth).set("task_bound", self.task_bound);
        r.set("tasks.total", self.verdicts.len());
        r.set("tasks.fulfilled", self.fulfilled());
        r.set("tasks.unfulfilled", self.unfulfilled());
        r.set("tasks.unfulfilled_below_top", self.unfulfilled_below_top());
        r.set("logged.total", self.logged.len());
        r.set("logged.verified", self.logged.iter().filter(|(_, ok)| *ok).count());
        r.set("logged_ok", self.logged_ok());
        for i in 1..=self.depth {
            let at: Vec<&Verdict> = self.verdicts.iter().filter(|(t, _)| t.level == i).map(|(_, v)| v).collect();
            let key = index_key(i, self.depth);
            r.set(format!("level.{key}.native"), at.len());
            r.set(format!("level.{key}.unfulfilled"), at.iter().filter(|v| ***v == Verdict::Unfulfilled).count());
        }
        for (t, v) in &self.verdicts {
            r.set(format!("task.{t}"), v);
        }
        r
    }
}

pub fn certify_extension(sys: &InverseSystem, cls: &StructureClass, task_bound: usize) -> ExtensionCertificate {
    let tasks: Vec<Task> = (1..=sys.depth()).flat_map(|i| native_tasks(sys, cls, i, task_bound)).collect();
    let verdicts = tasks
        .into_par_iter()
        .map(|t| {
            let v = match fulfill(sys, cls, &t) {
                Some((level, h)) => Verdict::Fulfilled { level, h },
                None => Verdict::Unfulfilled,
            };
            (t, v)
        })
        .collect();
    let logged = sys
        .provenance()
        .iter()
        .filter_map(|p| match p {
            Provenance::Discharge { level, task, witness, .. } | Provenance::Searched { level, task, witness } => {
                Some((task.clone(), check_fulfillment(sys, cls, task, *level, witness)))
            }
            _ => None,
        })
        .collect();
    ExtensionCertificate { depth: sys.depth(), task_bound, verdicts, logged }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualVerdict {
    pub symbol: String,
    pub at_level: bool,
    /// Membership of the pullback at each level from `i0` up.
    pub pullbacks: Vec<bool>,
}

impl DualVerdict {
    pub fn stable(&self) -> bool {
        self.pullbacks.iter().all(|&v| v == self.at_level)
    }
}

/// Membership of the labeling `e` of `B_{i0}` in each dual symbol of
/// matching arity, and of its pullbacks along the bonds.
pub fn evaluate_dual_tuple(sys: &InverseSystem, i0: usize, e: &[usize]) -> Result<Vec<DualVerdict>, LimitError> {
    sys.check_level(i0)?;
    let base = sys.level(i0);
    if e.len() != base.size() {
        return Err(LimitError::LabelingSize { expected: base.size(), found: e.len() });
    }
    let arity = e.iter().max().map_or(0, |m| m + 1);
    let labels: BTreeSet<usize> = e.iter().copied().collect();
    if labels.len() != arity {
        return Err(LimitError::LabelingNotSurjective);
    }
    let sig = base.signature();
    let symbols: Vec<usize> = (0..sig.len())
        .filter(|&i| sig.symbols()[i].kind == SymbolKind::Dual && sig.symbols()[i].arity == arity)
        .collect();
    if symbols.is_empty() {
        return Err(LimitError::ArityMismatch(arity));
    }
    let member = |level: usize, idx: usize, lab: Vec<usize>| {
        sys.level(level).interpretation(idx).as_dual().is_some_and(|set| set.contains(&crate::model::DualTuple(lab)))
    };
    Ok(symbols
        .into_iter()
        .map(|idx| {
            let pullbacks = (i0..=sys.depth())
                .map(|j| {
                    let p = sys.projection(j, i0).expect("in range");
                    member(j, idx, p.table().iter().map(|&x| e[x]).collect())
                })
                .collect();
            DualVerdict { symbol: sig.symbols()[idx].name.clone(), at_level: member(i0, idx, e.to_vec()), pullbacks }
        })
        .collect())
}

/// One rung of the back-and-forth tower: `A_n`, the bond `ρ: A_n -> A_{n-1}`
/// (absent at `n = 0`), and epimorphisms onto `A_n` from a level of each
/// system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rung {
    pub structure: FiniteStructure,
    pub rho: Option<SurjectiveMap>,
    pub f_level: usize,
    pub f: SurjectiveMap,
    pub g_level: usize,
    pub g: SurjectiveMap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackAndForth {
    pub rungs: Vec<Rung>,
    pub requested: usize,
    pub stuck: Option<String>,
}

impl BackAndForth {
    pub fn completed(&self) -> usize {
        self.rungs.len() - 1
    }

    pub fn complete(&self) -> bool {
        self.stuck.is_none() && self.completed() == self.requested
    }

    /// Re-checks every map and commuting square, and the anchoring of each
    /// rung to level 0.
    pub fn verify(&self, sys1: &InverseSystem, sys2: &InverseSystem) -> bool {
        let epi =
            |m: &SurjectiveMap, a: &FiniteStructure, b: &FiniteStructure| is_epimorphism(m, a, b).unwrap_or(false);
        let Some(first) = self.rungs.first() else { return false };
        for (n, rung) in self.rungs.iter().enumerate() {
            if rung.f_level == 0 || rung.f_level > sys1.depth() || rung.g_level == 0 || rung.g_level > sys2.depth() {
                return false;
            }
            if !epi(&rung.f, sys1.level(rung.f_level), &rung.structure)
                || !epi(&rung.g, sys2.level(rung.g_level), &rung.structure)
            {
                return false;
            }
            if n == 0 {
                continue;
            }
            let prev = &self.rungs[n - 1];
            let Some(rho) = &rung.rho else { return false };
            if !epi(rho, &rung.structure, &prev.structure) || rung.f_level < prev.f_level || rung.g_level < prev.g_level
            {
                return false;
            }
            let pf = sys1.projection(rung.f_level, prev.f_level).expect("in range");
            let pg = sys2.projection(rung.g_level, prev.g_level).expect("in range");
            if rung.f.then(rho) != pf.then(&prev.f) || rung.g.then(rho) != pg.then(&prev.g) {
                return false;
            }
            // Anchoring: compose ρ's down to A_0.
            let mut down_f = rung.f.clone();
            let mut down_g = rung.g.clone();
            for k in (1..=n).rev() {
                let r = self.rungs[k].rho.as_ref().expect("checked");
                down_f = down_f.then(r);
                down_g = down_g.then(r);
            }
            let to1 = sys1.projection(rung.f_level, first.f_level).expect("in range").then(&first.f);
            let to2 = sys2.projection(rung.g_level, first.g_level).expect("in range").then(&first.g);
            if down_f != to1 || down_g != to2 {
                return false;
            }
        }
        true
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new();
        r.set("requested", self.requested).set("completed", self.completed()).set("complete", self.complete());
        if let Some(s) = &self.stuck {
            r.set("stuck", s);
        }
        for (n, rung) in self.rungs.iter().enumerate() {
            let k = index_key(n, self.requested);
            r.set(format!("rung.{k}.size"), rung.structure.size());
            r.set(format!("rung.{k}.f_level"), rung.f_level);
            r.set_map(format!("rung.{k}.f"), &rung.f);
            r.set(format!("rung.{k}.g_level"), rung.g_level);
            r.set_map(format!("rung.{k}.g"), &rung.g);
            if let Some(rho) = &rung.rho {
                r.set_map(format!("rung.{k}.rho"), rho);
            }
        }
        r
    }
}

/// Builds `A_0 = anchor, A_1, ..., A_depth`. Odd steps take the next level
/// of `sys1`, refine it against `f_{n-1}` (the refinement of a map with the
/// identity is a relabeled copy of the level) and then look for a lift
/// through `sys2`; even steps swap the roles.
pub fn back_and_forth(
    sys1: &InverseSystem,
    sys2: &InverseSystem,
    anchor: &FiniteStructure,
    f: &SurjectiveMap,
    g: &SurjectiveMap,
    depth: usize,
) -> Result<BackAndForth, LimitError> {
    let ok1 = is_epimorphism(f, sys1.level(1), anchor).map_err(|e| LimitError::BadAnchor(e.to_string()))?;
    let ok2 = is_epimorphism(g, sys2.level(1), anchor).map_err(|e| LimitError::BadAnchor(e.to_string()))?;
    if !ok1 || !ok2 {
        return Err(LimitError::BadAnchor("anchor maps must be epimorphisms from level 1".into()));
    }
    let mut rungs =
        vec![Rung { structure: anchor.clone(), rho: None, f_level: 1, f: f.clone(), g_level: 1, g: g.clone() }];
    let mut stuck = None;
    for n in 1..=depth {
        let prev = rungs.last().expect("nonempty");
        let odd = n % 2 == 1;
        let (lead, follow) = if odd { (sys1, sys2) } else { (sys2, sys1) };
        let (lead_level, lead_map, follow_level, follow_map) = if odd {
            (prev.f_level, &prev.f, prev.g_level, &prev.g)
        } else {
            (prev.g_level, &prev.g, prev.f_level, &prev.f)
        };
        let next = lead_level + 1;
        if next > lead.depth() {
            stuck = Some(format!("step {n}: system {} has no level {next}", if odd { 1 } else { 2 }));
            break;
        }
        let down = lead.bond(lead_level).then(lead_map);
        let refinement = refine_maps(lead.level(next), &down, &SurjectiveMap::identity(lead.level(next).size()));
        let structure = refinement.refined;
        let rho = refinement.factor_f;
        let lifted = (follow_level..=follow.depth()).find_map(|b| {
            let target = follow.projection(b, follow_level).ok()?.then(follow_map);
            find_lift(follow.level(b), &structure, &rho, &target).ok().flatten().map(|h| (b, h))
        });
        let Some((b, h)) = lifted else {
            stuck = Some(format!(
                "step {n}: no level {follow_level}..{} of system {} lifts through the refinement",
                follow.depth(),
                if odd { 2 } else { 1 }
            ));
            break;
        };
        let rung = if odd {
            Rung { structure, rho: Some(rho), f_level: next, f: refinement.h, g_level: b, g: h }
        } else {
            Rung { structure, rho: Some(rho), f_level: b, f: h, g_level: next, g: refinement.h }
        };
        rungs.push(rung);
    }
    Ok(BackAndForth { rungs, requested: depth, stuck })
}

/// Bonds and per-level sizes as report lines.
pub fn system_report(sys: &InverseSystem) -> Report {
    let mut r = sys.summary();
    for i in 1..sys.depth() {
        r.set(format!("bond.{}", index_key(i, sys.depth())), join(sys.bond(i).table()));
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{r_path, r_paths_up_to};
    use crate::epi::first_epimorphism;

    fn point_class() -> StructureClass {
        StructureClass::new(vec![r_path(1)], 1).unwrap()
    }

    fn paths(n: usize) -> StructureClass {
        StructureClass::new(r_paths_up_to(n), n).unwrap()
    }

    #[test]
    fn task_and_provenance_round_trip() {
        let t = Task {
            level: 2,
            a: 1,
            b: 2,
            f: SurjectiveMap::from_table(vec![0, 1, 1]).unwrap(),
            g: SurjectiveMap::from_table(vec![1, 0, 10, 2, 3, 4, 5, 6, 7, 8, 9]).unwrap(),
        };
        assert_eq!(t.to_string().parse::<Task>().unwrap(), t);
        let entries = vec![
            Provenance::Start { member: 0 },
            Provenance::Jsp { level: 2, member: 1, via: 1, onto: SurjectiveMap::identity(2) },
            Provenance::Discharge { level: 3, task: t.clone(), via: 2, witness: SurjectiveMap::identity(3) },
            Provenance::Searched { level: 3, task: t, witness: SurjectiveMap::identity(3) },
            Provenance::Exhausted { level: 4 },
            Provenance::Note("atom 3 refines 1".into()),
        ];
        for e in entries {
            assert_eq!(e.to_string().parse::<Provenance>().unwrap(), e);
        }
        assert!("jsp level=2".parse::<Provenance>().is_err());
    }

    #[test]
    fn point_chains_are_constant() {
        let cls = point_class();
        for sys in [build_age_chain(&cls, 4).unwrap(), build_generic_sequence(&cls, 4, 3, 9).unwrap()] {
            assert_eq!(sys.depth(), 4);
            assert!(sys.levels().iter().all(|l| l.size() == 1));
            let cert = certify_extension(&sys, &cls, 3);
            assert_eq!(cert.unfulfilled(), 0);
            assert!(cert.recheck(&sys, &cls));
            assert!(cert
                .verdicts
                .iter()
                .all(|(t, v)| matches!(v, Verdict::Fulfilled { level, .. } if *level == t.level)));
        }
        assert_eq!(build_age_chain(&cls, 1).unwrap().depth(), 1);
        assert_eq!(build_age_chain(&cls, 0), Err(LimitError::ZeroDepth));
    }

    #[test]
    fn age_chain_of_paths_covers_every_member() {
        let cls = paths(4);
        let sys = build_age_chain(&cls, 4).unwrap();
        for m in cls.members() {
            assert!((1..=4).any(|i| first_epimorphism(sys.level(i), m).unwrap().is_some()));
        }
        for p in sys.provenance() {
            if let Provenance::Jsp { level, member, onto, .. } = p {
                assert!(is_epimorphism(onto, sys.level(*level), cls.member(*member)).unwrap());
            }
        }
    }

    #[test]
    fn age_chain_leaves_tasks_open() {
        let cls = paths(4);
        let sys = build_age_chain(&cls, 4).unwrap();
        let cert = certify_extension(&sys, &cls, 3);
        assert!(cert.unfulfilled() > 0);
        assert!(cert.recheck(&sys, &cls));
        assert!(cert.logged.is_empty());
    }

    #[test]
    fn threads_follow_bonds() {
        let sys = build_age_chain(&paths(4), 4).unwrap();
        let threads = sys.threads();
        assert_eq!(threads.len(), sys.level(4).size());
        assert!(threads.iter().all(|t| sys.is_thread(t)));
        assert!(!sys.is_thread(&Thread { coordinates: vec![0; 3] }));
    }

    #[test]
    fn generic_sequence_is_self_consistent() {
        let cls = paths(6);
        let sys = build_generic_sequence(&cls, 5, 3, 1).unwrap();
        assert_eq!(sys.depth(), 5);
        let cert = certify_extension(&sys, &cls, 3);
        assert!(!cert.logged.is_empty());
        assert!(cert.logged_ok());
        assert!(cert.recheck(&sys, &cls));
    }

    #[test]
    fn corrupted_witness_fails_recheck() {
        let cls = paths(6);
        let sys = build_generic_sequence(&cls, 4, 2, 3).unwrap();
        let cert = certify_extension(&sys, &cls, 2);
        let mut bad = cert.clone();
        let idx = bad.verdicts.iter().position(|(_, v)| matches!(v, Verdict::Fulfilled { .. })).unwrap();
        if let Verdict::Fulfilled { level, .. } = bad.verdicts[idx].1.clone() {
            // A constant map is never an epimorphism onto B once |B| > 1, and
            // when |B| = 1 the level mismatch breaks the shape check.
            let wrong_level = if level > 1 { level - 1 } else { level + 1 };
            let h = bad.verdicts[idx].1.clone();
            if let Verdict::Fulfilled { h, .. } = h {
                bad.verdicts[idx].1 = Verdict::Fulfilled { level: wrong_level, h };
            }
        }
        assert!(!bad.recheck(&sys, &cls));
    }

    #[test]
    fn dual_tuple_pullbacks_are_stable_and_detect_corruption() {
        use crate::model::{Signature, SymbolDecl};
        use std::sync::Arc;
        let sig = Arc::new(Signature::new(vec![SymbolDecl::dual("P", 2)], false).unwrap());
        let mut b1 = FiniteStructure::empty(sig.clone(), 2);
        b1.insert_dual("P", vec![0, 1]).unwrap();
        let mut b2 = FiniteStructure::empty(sig, 3);
        b2.insert_dual("P", vec![0, 1, 1]).unwrap();
        let bond = SurjectiveMap::from_table(vec![0, 1, 1]).unwrap();
        let sys = InverseSystem::new(vec![b1.clone(), b2.clone()], vec![bond], vec![]).unwrap();
        let v = evaluate_dual_tuple(&sys, 1, &[0, 1]).unwrap();
        assert!(v[0].at_level && v[0].stable());
        let v = evaluate_dual_tuple(&sys, 1, &[1, 0]).unwrap();
        assert!(!v[0].at_level && v[0].stable());

        let corrupted = SurjectiveMap::from_table(vec![0, 0, 1]).unwrap();
        let broken = InverseSystem::new_unchecked(vec![b1, b2], vec![corrupted], vec![]);
        assert!(broken.validate().is_err());
        let v = evaluate_dual_tuple(&broken, 1, &[0, 1]).unwrap();
        assert!(!v[0].stable());

        assert_eq!(evaluate_dual_tuple(&sys, 1, &[0, 2]), Err(LimitError::LabelingNotSurjective));
        assert_eq!(evaluate_dual_tuple(&sys, 1, &[0]), Err(LimitError::LabelingSize { expected: 2, found: 1 }));
        assert_eq!(evaluate_dual_tuple(&sys, 2, &[0, 1, 2]), Err(LimitError::ArityMismatch(3)));
    }

    #[test]
    fn back_and_forth_on_point_chains() {
        let cls = point_class();
        let sys = build_age_chain(&cls, 6).unwrap();
        let id = SurjectiveMap::identity(1);
        let bf = back_and_forth(&sys, &sys, &r_path(1), &id, &id, 5).unwrap();
        assert!(bf.complete());
        assert!(bf.verify(&sys, &sys));
        assert!(bf.rungs.iter().all(|r| r.structure.size() == 1));
    }

    #[test]
    fn back_and_forth_reports_the_stuck_step() {
        // System 2 never grows past a point, so step 1 cannot lift a 2-path.
        let s1 = build_age_chain(&paths(3), 3).unwrap();
        let s2 = build_age_chain(&point_class(), 3).unwrap();
        let id = SurjectiveMap::identity(1);
        let bf = back_and_forth(&s1, &s2, &r_path(1), &id, &id, 2).unwrap();
        assert!(!bf.complete());
        assert_eq!(bf.completed(), 0);
        assert!(bf.stuck.as_deref().unwrap().starts_with("step 1"));
        assert!(bf.verify(&s1, &s2));
    }
}
