//! Belief-desire-intention agent kernel.
//!
//! An [`AgentState`] holds a belief base, the adopted goals, the intentions
//! committed to so far and a plan library. [`step`] runs one deliberation
//! cycle:
//!
//! 1. fold the inbox into goals (when a plan reacts to the message) or beliefs;
//! 2. deliberate, then commit the first applicable plan for every goal that has
//!    no live intention (goals by adoption order, plans by declaration order);
//! 3. execute exactly one [`Step`] of the oldest intention.
//!
//! A cycle is a pure function of `(state, inbox)`. Side effects are returned
//! as outgoing envelopes and store commands; nothing else escapes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::message::{AgentId, Envelope, Performative};
use crate::term::{Atom, Term};

pub type Belief = Atom;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("belief predicate name is empty")]
    EmptyPredicate,
    #[error("predicate `{predicate}` has arity {expected} in this base, got {found}")]
    Arity {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("goal #{0} already has a live intention")]
    DuplicateIntention(u64),
    #[error("goal #{0} is not adopted by this agent")]
    UnknownGoal(u64),
    #[error("plan `{0}` has an empty body")]
    EmptyPlanBody(String),
}

/// Set of ground facts with a fixed arity per predicate name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BeliefBase {
    beliefs: BTreeSet<Belief>,
    arity: BTreeMap<String, usize>,
}

impl BeliefBase {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a belief. Returns `false` when it was already present.
    pub fn insert(&mut self, belief: Belief) -> Result<bool, KernelError> {
        if belief.name.is_empty() {
            return Err(KernelError::EmptyPredicate);
        }
        match self.arity.get(&belief.name) {
            Some(&expected) if expected != belief.arity() => {
                return Err(KernelError::Arity {
                    predicate: belief.name.clone(),
                    expected,
                    found: belief.arity(),
                })
            }
            Some(_) => {}
            None => {
                self.arity.insert(belief.name.clone(), belief.arity());
            }
        }
        Ok(self.beliefs.insert(belief))
    }

    pub fn remove(&mut self, belief: &Belief) -> bool {
        self.beliefs.remove(belief)
    }

    pub fn contains(&self, belief: &Belief) -> bool {
        self.beliefs.contains(belief)
    }

    /// All beliefs with the given predicate name, in term order.
    pub fn query<'a>(&'a self, predicate: &'a str) -> impl Iterator<Item = &'a Belief> + 'a {
        let start = Atom::new(predicate, Vec::new());
        self.beliefs
            .range(start..)
            .take_while(move |b| b.name == predicate)
    }

    /// Whether any belief named `predicate` has `first` as its first argument.
    pub fn holds_with(&self, predicate: &str, first: &Term) -> bool {
        self.query(predicate).any(|b| b.args.first() == Some(first))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Belief> {
        self.beliefs.iter()
    }

    pub fn len(&self) -> usize {
        self.beliefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beliefs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BeliefDelta {
    Add(Belief),
    Remove(Belief),
}

/// Apply `deltas` in list order. Re-adding a present belief and removing an
/// absent one are both no-ops.
pub fn update_beliefs(
    mut base: BeliefBase,
    deltas: &[BeliefDelta],
) -> Result<BeliefBase, KernelError> {
    apply_deltas(&mut base, deltas)?;
    Ok(base)
}

fn apply_deltas(base: &mut BeliefBase, deltas: &[BeliefDelta]) -> Result<(), KernelError> {
    for delta in deltas {
        match delta {
            BeliefDelta::Add(b) => {
                base.insert(b.clone())?;
            }
            BeliefDelta::Remove(b) => {
                base.remove(b);
            }
        }
    }
    Ok(())
}

/// An adopted desire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Goal {
    pub name: String,
    pub params: Vec<Term>,
    pub adoption_seq: u64,
}

impl Goal {
    /// Goals adopted from an incoming message are named `performative:content`
    /// and carry `[sender, conversation, content args...]`.
    pub fn message_parts(&self) -> Option<(Performative, &str)> {
        let (perf, content) = self.name.split_once(':')?;
        Some((perf.parse().ok()?, content))
    }

    /// Sender of a message-born goal.
    pub fn sender(&self) -> Option<AgentId> {
        self.params.first()?.as_str().map(AgentId::new)
    }

    /// Conversation id of a message-born goal.
    pub fn conversation(&self) -> Option<&str> {
        self.params.get(1)?.as_str()
    }

    /// Content arguments of a message-born goal.
    pub fn content_args(&self) -> &[Term] {
        self.params.get(2..).unwrap_or(&[])
    }
}

pub fn message_goal_name(performative: Performative, content: &str) -> String {
    format!("{performative}:{content}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Trigger {
    /// Fires on an adopted goal with this name.
    Goal(String),
    /// Fires on an incoming message; `None` matches anything.
    Message {
        performative: Option<Performative>,
        content: Option<String>,
    },
}

impl Trigger {
    pub fn goal(name: impl Into<String>) -> Self {
        Trigger::Goal(name.into())
    }

    pub fn message(performative: Performative, content: impl Into<String>) -> Self {
        Trigger::Message {
            performative: Some(performative),
            content: Some(content.into()),
        }
    }

    fn matches_message(&self, performative: Performative, content: &str) -> bool {
        match self {
            Trigger::Goal(_) => false,
            Trigger::Message {
                performative: p,
                content: c,
            } => p.is_none_or(|p| p == performative) && c.as_deref().is_none_or(|c| c == content),
        }
    }

    pub fn matches(&self, goal: &Goal) -> bool {
        match self {
            Trigger::Goal(name) => *name == goal.name,
            Trigger::Message { .. } => goal
                .message_parts()
                .is_some_and(|(p, c)| self.matches_message(p, c)),
        }
    }
}

/// A store mutation or query requested by an agent step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Command {
    pub name: String,
    pub args: Vec<Term>,
    pub conversation: String,
}

/// What a step function sees.
pub struct StepContext<'a> {
    pub agent: &'a AgentId,
    pub beliefs: &'a BeliefBase,
    pub goal: &'a Goal,
    pub params: &'a [Term],
    pub epoch: u64,
}

impl StepContext<'_> {
    /// Conversation id owned by the current intention, unique per agent and
    /// recovery epoch.
    pub fn conversation(&self) -> String {
        conversation_id(self.agent, self.epoch, self.goal.adoption_seq)
    }
}

pub fn conversation_id(agent: &AgentId, epoch: u64, seq: u64) -> String {
    format!("{agent}-{epoch}-{seq}")
}

/// Name and parameters of a goal adopted by an `EmitGoal` step.
pub type NewGoal = (String, Vec<Term>);

pub type ContextFn = fn(&BeliefBase, &Goal) -> bool;

pub enum Step {
    Send(fn(&StepContext<'_>) -> Vec<Envelope>),
    UpdateBeliefs(fn(&StepContext<'_>) -> Vec<BeliefDelta>),
    StoreCommand(fn(&StepContext<'_>) -> Option<Command>),
    EmitGoal(fn(&StepContext<'_>) -> Vec<NewGoal>),
}

impl Step {
    pub fn kind(&self) -> &'static str {
        match self {
            Step::Send(_) => "send",
            Step::UpdateBeliefs(_) => "update",
            Step::StoreCommand(_) => "command",
            Step::EmitGoal(_) => "emit",
        }
    }
}

impl fmt::Debug for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind())
    }
}

fn always(_: &BeliefBase, _: &Goal) -> bool {
    true
}

/// A named recipe: trigger, applicability context and a non-empty body.
///
/// Plans are identified by name; two plans with the same name in one library
/// are treated as equal.
#[derive(Debug)]
pub struct Plan {
    pub name: String,
    pub trigger: Trigger,
    pub context: ContextFn,
    pub body: Vec<Step>,
}

impl Plan {
    pub fn new(name: impl Into<String>, trigger: Trigger, body: Vec<Step>) -> Self {
        Plan {
            name: name.into(),
            trigger,
            context: always,
            body,
        }
    }

    pub fn when(mut self, context: ContextFn) -> Self {
        self.context = context;
        self
    }
}

impl PartialEq for Plan {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl Eq for Plan {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Intention {
    pub plan: Arc<Plan>,
    pub bound_params: Vec<Term>,
    pub pc: usize,
    pub origin_goal: Goal,
}

impl Intention {
    pub fn is_complete(&self) -> bool {
        self.pc >= self.plan.body.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentState {
    pub id: AgentId,
    pub beliefs: BeliefBase,
    pub goals: Vec<Goal>,
    pub intentions: Vec<Intention>,
    pub plan_library: Vec<Arc<Plan>>,
    pub next_goal_seq: u64,
    /// Incremented when an agent is rebuilt after a crash so conversation ids
    /// stay unique across restarts.
    pub epoch: u64,
}

impl AgentState {
    pub fn new(id: impl Into<AgentId>, plans: Vec<Plan>) -> Result<Self, KernelError> {
        if let Some(p) = plans.iter().find(|p| p.body.is_empty()) {
            return Err(KernelError::EmptyPlanBody(p.name.clone()));
        }
        Ok(AgentState {
            id: id.into(),
            beliefs: BeliefBase::new(),
            goals: Vec::new(),
            intentions: Vec::new(),
            plan_library: plans.into_iter().map(Arc::new).collect(),
            next_goal_seq: 0,
            epoch: 0,
        })
    }

    /// Adopt a new goal and return its adoption sequence number.
    pub fn adopt(&mut self, name: impl Into<String>, params: Vec<Term>) -> u64 {
        let seq = self.next_goal_seq;
        self.next_goal_seq += 1;
        self.goals.push(Goal {
            name: name.into(),
            params,
            adoption_seq: seq,
        });
        seq
    }

    /// Apply belief changes from outside the cycle (store results, recovery).
    pub fn perceive(&mut self, deltas: &[BeliefDelta]) -> Result<(), KernelError> {
        apply_deltas(&mut self.beliefs, deltas)
    }

    pub fn has_live_intention(&self, adoption_seq: u64) -> bool {
        self.intentions
            .iter()
            .any(|i| i.origin_goal.adoption_seq == adoption_seq)
    }

    /// No goals and no intentions: a cycle with an empty inbox is a no-op.
    pub fn is_idle(&self) -> bool {
        self.goals.is_empty() && self.intentions.is_empty()
    }

    /// Conversation id of the intention adopted as goal `seq`.
    pub fn conversation_for(&self, seq: u64) -> String {
        conversation_id(&self.id, self.epoch, seq)
    }
}

pub type PlanOption = (Goal, Arc<Plan>);

/// Every applicable (goal, plan) pair for goals without a live intention,
/// ordered by adoption sequence then plan declaration order.
pub fn deliberate(state: &AgentState) -> Vec<PlanOption> {
    let mut goals: Vec<&Goal> = state
        .goals
        .iter()
        .filter(|g| !state.has_live_intention(g.adoption_seq))
        .collect();
    goals.sort_by_key(|g| g.adoption_seq);
    let mut options = Vec::new();
    for goal in goals {
        for plan in &state.plan_library {
            if plan.trigger.matches(goal) && (plan.context)(&state.beliefs, goal) {
                options.push((goal.clone(), Arc::clone(plan)));
            }
        }
    }
    options
}

/// Commit to `option`, appending a fresh intention at `pc = 0`.
pub fn commit(mut state: AgentState, option: PlanOption) -> Result<AgentState, KernelError> {
    commit_in_place(&mut state, option)?;
    Ok(state)
}

fn commit_in_place(state: &mut AgentState, (goal, plan): PlanOption) -> Result<(), KernelError> {
    if !state
        .goals
        .iter()
        .any(|g| g.adoption_seq == goal.adoption_seq)
    {
        return Err(KernelError::UnknownGoal(goal.adoption_seq));
    }
    if state.has_live_intention(goal.adoption_seq) {
        return Err(KernelError::DuplicateIntention(goal.adoption_seq));
    }
    state.intentions.push(Intention {
        plan,
        bound_params: goal.params.clone(),
        pc: 0,
        origin_goal: goal,
    });
    Ok(())
}

/// The step executed during a cycle, for tracing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutedStep {
    pub goal_seq: u64,
    pub plan: String,
    pub pc: usize,
    pub kind: &'static str,
    pub completed: bool,
}

/// Side effects of one cycle.
#[derive(Debug, Default)]
pub struct CycleEffects {
    pub outbox: Vec<Envelope>,
    pub commands: Vec<Command>,
    /// `(goal seq, plan name)` pairs committed this cycle.
    pub committed: Vec<(u64, String)>,
    pub executed: Option<ExecutedStep>,
}

#[derive(Debug)]
pub struct CycleOutput {
    pub state: AgentState,
    pub outbox: Vec<Envelope>,
    pub commands: Vec<Command>,
    pub committed: Vec<(u64, String)>,
    pub executed: Option<ExecutedStep>,
}

/// One full deliberation cycle. See the module docs for the phases.
pub fn step(mut state: AgentState, inbox: Vec<Envelope>) -> Result<CycleOutput, KernelError> {
    let fx = run_cycle(&mut state, inbox)?;
    Ok(CycleOutput {
        state,
        outbox: fx.outbox,
        commands: fx.commands,
        committed: fx.committed,
        executed: fx.executed,
    })
}

/// [`step`] on a borrowed state.
pub fn run_cycle(
    state: &mut AgentState,
    inbox: Vec<Envelope>,
) -> Result<CycleEffects, KernelError> {
    // perceive
    for env in inbox {
        let content = env.content.name.as_str();
        let reactive = state
            .plan_library
            .iter()
            .any(|p| p.trigger.matches_message(env.performative, content));
        let name = message_goal_name(env.performative, content);
        let mut params = Vec::with_capacity(env.content.args.len() + 2);
        params.push(Term::Id(env.sender.as_str().to_string()));
        params.push(Term::Text(env.conversation));
        params.extend(env.content.args);
        if reactive {
            state.adopt(name, params);
        } else {
            state.beliefs.insert(Atom::new(name, params))?;
        }
    }

    // deliberate + commit
    let mut committed = Vec::new();
    for option in deliberate(state) {
        if state.has_live_intention(option.0.adoption_seq) {
            continue;
        }
        committed.push((option.0.adoption_seq, option.1.name.clone()));
        commit_in_place(state, option)?;
    }

    // execute one step of the oldest intention
    let mut outbox = Vec::new();
    let mut commands = Vec::new();
    let mut executed = None;
    if !state.intentions.is_empty() {
        let intention = &state.intentions[0];
        let plan = Arc::clone(&intention.plan);
        let pc = intention.pc;
        let mut new_goals = Vec::new();
        let mut deltas = Vec::new();
        {
            let ctx = StepContext {
                agent: &state.id,
                beliefs: &state.beliefs,
                goal: &intention.origin_goal,
                params: &intention.bound_params,
                epoch: state.epoch,
            };
            match &plan.body[pc] {
                Step::Send(f) => outbox = f(&ctx),
                Step::UpdateBeliefs(f) => deltas = f(&ctx),
                Step::StoreCommand(f) => commands.extend(f(&ctx)),
                Step::EmitGoal(f) => new_goals = f(&ctx),
            }
        }
        apply_deltas(&mut state.beliefs, &deltas)?;
        let intention = &mut state.intentions[0];
        intention.pc += 1;
        let goal_seq = intention.origin_goal.adoption_seq;
        let completed = intention.is_complete();
        if completed {
            state.intentions.remove(0);
            state.goals.retain(|g| g.adoption_seq != goal_seq);
        }
        for (name, params) in new_goals {
            state.adopt(name, params);
        }
        executed = Some(ExecutedStep {
            goal_seq,
            plan: plan.name.clone(),
            pc,
            kind: plan.body[pc].kind(),
            completed,
        });
    }

    Ok(CycleEffects {
        outbox,
        commands,
        committed,
        executed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(name: &str, args: Vec<Term>) -> Belief {
        Atom::new(name, args)
    }

    #[test]
    fn update_beliefs_examples() {
        let ali = b("student", vec![Term::Int(1), Term::text("Ali")]);
        let base = update_beliefs(BeliefBase::new(), &[BeliefDelta::Add(ali.clone())]).unwrap();
        assert_eq!(base.iter().collect::<Vec<_>>(), vec![&ali]);

        let base = update_beliefs(base, &[BeliefDelta::Add(ali.clone())]).unwrap();
        assert_eq!(base.len(), 1);

        let p = |i| b("p", vec![Term::Int(i)]);
        let base = update_beliefs(
            BeliefBase::new(),
            &[BeliefDelta::Add(p(1)), BeliefDelta::Add(p(2))],
        )
        .unwrap();
        let after = update_beliefs(base.clone(), &[BeliefDelta::Remove(p(3))]).unwrap();
        assert_eq!(after, base);
    }

    #[test]
    fn deltas_apply_in_list_order() {
        let p = b("p", vec![Term::Int(1)]);
        let base = update_beliefs(
            BeliefBase::new(),
            &[BeliefDelta::Remove(p.clone()), BeliefDelta::Add(p.clone())],
        )
        .unwrap();
        assert!(base.contains(&p));
        let base = update_beliefs(
            base,
            &[BeliefDelta::Add(p.clone()), BeliefDelta::Remove(p.clone())],
        )
        .unwrap();
        assert!(!base.contains(&p));
    }

    #[test]
    fn arity_is_fixed_per_predicate() {
        let mut base = BeliefBase::new();
        base.insert(b("p", vec![Term::Int(1)])).unwrap();
        let err = base
            .insert(b("p", vec![Term::Int(1), Term::Int(2)]))
            .unwrap_err();
        assert!(matches!(
            err,
            KernelError::Arity {
                expected: 1,
                found: 2,
                ..
            }
        ));
        assert_eq!(base.insert(b("", vec![])), Err(KernelError::EmptyPredicate));
    }

    #[test]
    fn query_is_scoped_to_predicate() {
        let mut base = BeliefBase::new();
        for (n, i) in [("a", 1), ("p", 2), ("p", 1), ("q", 0), ("p_x", 5)] {
            base.insert(b(n, vec![Term::Int(i)])).unwrap();
        }
        let ps: Vec<_> = base.query("p").map(|x| x.args[0].clone()).collect();
        assert_eq!(ps, vec![Term::Int(1), Term::Int(2)]);
        assert_eq!(base.query("zz").count(), 0);
        assert!(base.holds_with("q", &Term::Int(0)));
    }

    fn noop(_: &StepContext<'_>) -> Vec<BeliefDelta> {
        Vec::new()
    }

    fn agent(plans: Vec<Plan>) -> AgentState {
        AgentState::new("T", plans).unwrap()
    }

    #[test]
    fn deliberate_with_no_goals_is_empty() {
        let a = agent(vec![Plan::new(
            "p1",
            Trigger::goal("g"),
            vec![Step::UpdateBeliefs(noop)],
        )]);
        assert!(deliberate(&a).is_empty());
    }

    #[test]
    fn deliberate_single_forced_option() {
        let mut a = agent(vec![Plan::new(
            "p1",
            Trigger::goal("g"),
            vec![Step::UpdateBeliefs(noop)],
        )]);
        a.adopt("g", vec![]);
        let opts = deliberate(&a);
        assert_eq!(opts.len(), 1);
        assert_eq!(opts[0].1.name, "p1");
    }

    fn never(_: &BeliefBase, _: &Goal) -> bool {
        false
    }

    #[test]
    fn deliberate_two_plans_in_declaration_order() {
        // Library: pa(g), pb(other), pc(g), pd(g, context false).
        // Hand enumeration for goal g: pa and pc match and are applicable.
        let mut a = agent(vec![
            Plan::new("pa", Trigger::goal("g"), vec![Step::UpdateBeliefs(noop)]),
            Plan::new(
                "pb",
                Trigger::goal("other"),
                vec![Step::UpdateBeliefs(noop)],
            ),
            Plan::new("pc", Trigger::goal("g"), vec![Step::UpdateBeliefs(noop)]),
            Plan::new("pd", Trigger::goal("g"), vec![Step::UpdateBeliefs(noop)]).when(never),
        ]);
        a.adopt("g", vec![]);
        let names: Vec<_> = deliberate(&a).iter().map(|o| o.1.name.clone()).collect();
        assert_eq!(names, vec!["pa", "pc"]);
    }

    #[test]
    fn commit_appends_and_rejects_second_intention() {
        let mut a = agent(vec![
            Plan::new("p1", Trigger::goal("g1"), vec![Step::UpdateBeliefs(noop)]),
            Plan::new("p2", Trigger::goal("g2"), vec![Step::UpdateBeliefs(noop)]),
        ]);
        a.adopt("g1", vec![]);
        let opt1 = deliberate(&a).remove(0);
        let a = commit(a, opt1.clone()).unwrap();
        assert_eq!(a.intentions.len(), 1);
        assert_eq!(a.intentions[0].pc, 0);
        assert_eq!(
            commit(a.clone(), opt1).unwrap_err(),
            KernelError::DuplicateIntention(0)
        );

        let mut a = a;
        a.adopt("g2", vec![]);
        let opt2 = deliberate(&a).remove(0);
        let a = commit(a, opt2).unwrap();
        let order: Vec<_> = a
            .intentions
            .iter()
            .map(|i| i.origin_goal.name.clone())
            .collect();
        assert_eq!(order, vec!["g1", "g2"]);
        // goals unchanged until completion
        assert_eq!(a.goals.len(), 2);
    }

    #[test]
    fn quiescent_step_is_identity() {
        let a = agent(vec![Plan::new(
            "p1",
            Trigger::goal("g"),
            vec![Step::UpdateBeliefs(noop)],
        )]);
        let out = step(a.clone(), vec![]).unwrap();
        assert_eq!(out.state, a);
        assert!(out.outbox.is_empty() && out.commands.is_empty() && out.executed.is_none());
    }

    fn reply(ctx: &StepContext<'_>) -> Vec<Envelope> {
        vec![Envelope::new(
            ctx.agent.clone(),
            ctx.goal.sender().unwrap(),
            Performative::Inform,
            ctx.goal.conversation().unwrap(),
            Atom::new("registered", ctx.goal.content_args().to_vec()),
        )]
    }

    fn mark(ctx: &StepContext<'_>) -> Vec<BeliefDelta> {
        vec![BeliefDelta::Add(Atom::new(
            "seen",
            vec![Term::text(ctx.goal.conversation().unwrap())],
        ))]
    }

    #[test]
    fn reactive_request_creates_intention_in_same_cycle() {
        // Hand trace of one cycle: the request folds into goal #0
        // `request:register`, deliberation yields (goal #0, handle), commit
        // appends it at pc 0, execution runs step 0 (update) and leaves pc 1.
        let a = agent(vec![Plan::new(
            "handle",
            Trigger::message(Performative::Request, "register"),
            vec![Step::UpdateBeliefs(mark), Step::Send(reply)],
        )]);
        let req = Envelope::new(
            "GW".into(),
            "T".into(),
            Performative::Request,
            "c1",
            Atom::new("register", vec![Term::Int(7)]),
        );
        let out = step(a, vec![req]).unwrap();
        assert_eq!(out.committed, vec![(0, "handle".to_string())]);
        assert_eq!(out.state.intentions.len(), 1);
        assert_eq!(out.state.intentions[0].pc, 1);
        assert!(out.outbox.is_empty());
        assert!(out
            .state
            .beliefs
            .contains(&Atom::new("seen", vec![Term::text("c1")])));

        // Last step: side effect emitted, intention and goal removed.
        let out = step(out.state, vec![]).unwrap();
        assert_eq!(out.outbox.len(), 1);
        assert_eq!(out.outbox[0].receiver, AgentId::new("GW"));
        assert_eq!(out.outbox[0].conversation, "c1");
        assert!(out.executed.as_ref().unwrap().completed);
        assert!(out.state.is_idle());
    }

    #[test]
    fn unmatched_message_becomes_belief() {
        let a = agent(vec![]);
        let env = Envelope::new(
            "OA".into(),
            "T".into(),
            Performative::Inform,
            "c9",
            Atom::new("rows", vec![Term::Int(3)]),
        );
        let out = step(a, vec![env]).unwrap();
        let belief = Atom::new(
            "inform:rows",
            vec![Term::id("OA"), Term::text("c9"), Term::Int(3)],
        );
        assert!(out.state.beliefs.contains(&belief));
        assert!(out.state.is_idle());
    }

    #[test]
    fn empty_plan_body_rejected() {
        let err =
            AgentState::new("X", vec![Plan::new("bad", Trigger::goal("g"), vec![])]).unwrap_err();
        assert_eq!(err, KernelError::EmptyPlanBody("bad".into()));
    }
}
