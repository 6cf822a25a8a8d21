//! Hierarchical center/client protocol.
//!
//! The center partitions the whole map into per-robot subtasks. Clients
//! refine their subtask locally with a TSP, replan at every goal they
//! reach, and report progress. The center replans when a subtask finishes
//! or drifts from its expected workload, while clients keep working.

use std::collections::BTreeMap;
use std::fmt::{self, Display, Write as _};

use crate::error::Result;
use crate::geometry::Point;
use crate::gridmap::{CellState, OccupancyGrid, RoiMask};
use crate::planner::{build_context, local_order, plan, region_goal, PlanOutcome, PlannerConfig, RoutePlan};
use crate::regiongraph::WorkloadStats;
use crate::simulator::{Controller, ScenarioConfig, World};

/// Line-oriented event log: `<time> <node> <kind> <detail>`.
#[derive(Clone, Debug, PartialEq)]
pub struct EventLog {
    dt: f64,
    text: String,
    lines: usize,
}

impl EventLog {
    pub fn new(dt: f64) -> Self {
        Self { dt, text: String::new(), lines: 0 }
    }

    pub fn record(&mut self, tick: u64, node: impl Display, kind: &str, detail: impl Display) {
        let _ = writeln!(self.text, "{:.3} {node} {kind} {detail}", tick as f64 * self.dt);
        self.lines += 1;
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn len(&self) -> usize {
        self.lines
    }

    pub fn is_empty(&self) -> bool {
        self.lines == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeId {
    Center,
    Client(usize),
}

impl Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Center => write!(f, "center"),
            NodeId::Client(k) => write!(f, "client{k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Subtask {
    pub roi: RoiMask,
    pub guide_path: Vec<Point>,
    /// Plan counter; strictly increasing per client.
    pub epoch: u64,
    /// Expected workload of the whole subtask, m.
    pub expected_workload: f64,
    /// Travel per explored area when the plan was made, m/m².
    pub rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskStatus {
    Executing,
    Done,
    Failed,
}

impl Display for TaskStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskStatus::Executing => "executing",
            TaskStatus::Done => "done",
            TaskStatus::Failed => "failed",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProgressReport {
    pub client: usize,
    /// Workload equivalent of the area explored since the subtask began, m.
    pub w_explored: f64,
    /// Estimated workload still ahead, m.
    pub w_remaining: f64,
    /// Workload the center expected for the subtask, m.
    pub w_expected: f64,
    pub epoch: u64,
    pub status: TaskStatus,
}

/// Abnormal-progress test: explored plus remaining minus expected workload
/// reaches the threshold.
pub fn progress_check(report: &ProgressReport, threshold: f64) -> bool {
    report.w_explored + report.w_remaining - report.w_expected >= threshold
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    MapUpdate { cells: usize },
    PositionUpdate { position: Point },
    SubtaskDispatch { epoch: u64, subtask: Option<Subtask> },
    Progress(ProgressReport),
    ReplanRequest,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub sender: NodeId,
    pub receiver: NodeId,
    pub payload: Payload,
    pub sent: u64,
    pub deliver: u64,
}

/// Simulated transport with fixed latency and FIFO order per
/// sender/receiver pair.
#[derive(Clone, Debug, Default)]
pub struct MessageBus {
    latency: u64,
    seq: u64,
    queue: BTreeMap<(u64, u64), Envelope>,
    last: BTreeMap<(NodeId, NodeId), u64>,
}

impl MessageBus {
    pub fn new(latency_ticks: u64) -> Self {
        Self { latency: latency_ticks, ..Self::default() }
    }

    pub fn send(&mut self, sender: NodeId, receiver: NodeId, payload: Payload, now: u64) {
        let floor = self.last.get(&(sender, receiver)).copied().unwrap_or(0);
        let deliver = (now + self.latency).max(floor);
        self.last.insert((sender, receiver), deliver);
        self.queue.insert((deliver, self.seq), Envelope { sender, receiver, payload, sent: now, deliver });
        self.seq += 1;
    }

    /// Messages due at or before `now`, in delivery order.
    pub fn deliver_due(&mut self, now: u64) -> Vec<Envelope> {
        let later = self.queue.split_off(&(now + 1, 0));
        std::mem::replace(&mut self.queue, later).into_values().collect()
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CenterState {
    Idle,
    Planning,
    Monitoring,
}

impl CenterState {
    pub fn can_become(self, next: CenterState) -> bool {
        use CenterState::*;
        matches!((self, next), (Idle, Planning) | (Planning, Monitoring) | (Planning, Idle) | (Monitoring, Planning))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClientState {
    Idle,
    Transferring,
    Exploring,
    AwaitingTask,
}

impl ClientState {
    pub fn can_become(self, next: ClientState) -> bool {
        use ClientState::*;
        match next {
            Idle => false,
            Transferring => true,
            Exploring => matches!(self, Transferring | Exploring),
            AwaitingTask => self != AwaitingTask,
        }
    }
}

impl Display for CenterState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Display for ClientState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Trigger {
    Manual,
    Finished { client: usize, status: TaskStatusTag },
    Progress { client: usize },
    /// A client without a subtask asked for work.
    Request { client: usize },
}

/// `TaskStatus` minus `Executing`, for triggers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskStatusTag {
    Done,
    Failed,
}

impl Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trigger::Manual => write!(f, "manual"),
            Trigger::Finished { client, status: TaskStatusTag::Done } => write!(f, "done:client{client}"),
            Trigger::Finished { client, status: TaskStatusTag::Failed } => write!(f, "failed:client{client}"),
            Trigger::Progress { client } => write!(f, "progress:client{client}"),
            Trigger::Request { client } => write!(f, "request:client{client}"),
        }
    }
}

/// Triggers raised by one report addressed to the center. Reports from
/// an outdated plan are ignored.
pub fn replan_triggers(report: &ProgressReport, current_epoch: u64, threshold: f64) -> Option<Trigger> {
    if report.epoch != current_epoch {
        return None;
    }
    match report.status {
        TaskStatus::Done => Some(Trigger::Finished { client: report.client, status: TaskStatusTag::Done }),
        TaskStatus::Failed => Some(Trigger::Finished { client: report.client, status: TaskStatusTag::Failed }),
        TaskStatus::Executing => progress_check(report, threshold).then_some(Trigger::Progress { client: report.client }),
    }
}

/// Subtasks for every robot in a plan; `None` for robots with nothing to do.
pub fn subtasks(plan: &RoutePlan, epoch: u64, stats: &WorkloadStats, sensor_radius: f64, grid: &OccupancyGrid) -> Vec<Option<Subtask>> {
    let rate = stats.rate().unwrap_or(1.0 / (2.0 * sensor_radius));
    (0..plan.sequences.len())
        .map(|k| {
            if plan.sequences[k].is_empty() {
                return None;
            }
            let mut roi = RoiMask::empty(grid.width(), grid.height());
            for &j in &plan.sequences[k] {
                let v = &plan.graph.vertices[j];
                v.region.cells.iter().chain(&v.frontier.cells).for_each(|&c| roi.insert(c));
            }
            Some(Subtask {
                roi,
                guide_path: plan.guide_paths[k].clone(),
                epoch,
                expected_workload: plan.expected_workload(k),
                rate,
            })
        })
        .collect()
}

/// Deterministic per-stream seed derivation (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64, counter: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ counter.wrapping_mul(0xd1b5_4a32_d192_ed03);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct Center {
    state: CenterState,
    /// Epoch of the plan being computed or last dispatched.
    epoch: u64,
    dispatched: u64,
    ready_at: u64,
    pending: Option<Trigger>,
    outbox: Vec<Option<Subtask>>,
}

struct ActiveTask {
    subtask: Subtask,
    explored_cells: usize,
    remaining: f64,
    roi_unknown: bool,
}

struct Client {
    state: ClientState,
    acked: u64,
    task: Option<ActiveTask>,
    local_plans: u64,
    waiting_since: Option<u64>,
    /// Doubling exponent of the request period while left without work.
    backoff: u32,
}

const MAX_BACKOFF: u32 = 3;

/// True when an Unknown cell of `roi` lies within `radius` of `p`.
fn sees_unknown_roi(grid: &OccupancyGrid, roi: &RoiMask, p: Point, radius: f64) -> bool {
    let res = grid.resolution();
    let reach = (radius / res).ceil() as i64;
    let (cx, cy) = ((p.x / res).floor() as i64, (p.y / res).floor() as i64);
    (cy - reach..=cy + reach).any(|y| {
        (cx - reach..=cx + reach).any(|x| {
            if !grid.in_bounds(x, y) {
                return false;
            }
            let i = grid.index(x as usize, y as usize);
            roi.contains(i) && grid.get(i) == CellState::Unknown && grid.cell_center(i).distance(p) <= radius
        })
    })
}

/// Hierarchical strategy driving the center and every client.
pub struct Hierarchical {
    cfg: PlannerConfig,
    seed: u64,
    latency: u64,
    progress_every: u64,
    threshold: f64,
    bus: MessageBus,
    center: Center,
    clients: Vec<Client>,
    last_plan: Option<RoutePlan>,
}

impl Hierarchical {
    pub fn new(cfg: &ScenarioConfig, robots: usize) -> Self {
        Self {
            cfg: cfg.planner_config(),
            seed: cfg.seed,
            latency: cfg.ticks(cfg.planning_latency, 0),
            progress_every: cfg.ticks(cfg.progress_period, 1),
            threshold: cfg.w_threshold,
            bus: MessageBus::new(cfg.ticks(cfg.message_latency, 0)),
            center: Center {
                state: CenterState::Idle,
                epoch: 0,
                dispatched: 0,
                ready_at: 0,
                pending: None,
                outbox: Vec::new(),
            },
            clients: (0..robots)
                .map(|_| Client { state: ClientState::Idle, acked: 0, task: None, local_plans: 0, waiting_since: None, backoff: 0 })
                .collect(),
            last_plan: None,
        }
    }

    fn center_state(&mut self, next: CenterState, tick: u64, log: &mut EventLog, why: impl Display) {
        debug_assert!(self.center.state.can_become(next), "{} -> {}", self.center.state, next);
        log.record(tick, NodeId::Center, "state", format!("{}->{} {why}", self.center.state, next));
        self.center.state = next;
    }

    fn client_state(&mut self, k: usize, next: ClientState, tick: u64, log: &mut EventLog) {
        let c = &mut self.clients[k];
        if c.state == next {
            return;
        }
        debug_assert!(c.state.can_become(next), "{} -> {}", c.state, next);
        log.record(tick, NodeId::Client(k), "state", format!("{}->{}", c.state, next));
        c.state = next;
    }

    fn trigger(&mut self, trigger: Trigger, world: &mut World, log: &mut EventLog) -> Result<()> {
        match self.center.state {
            CenterState::Planning => {
                log.record(world.tick, NodeId::Center, "pending", &trigger);
                self.center.pending.get_or_insert(trigger);
                Ok(())
            }
            _ => self.start_planning(trigger, world, log),
        }
    }

    /// Plan from the current snapshot; dispatch after the latency.
    fn start_planning(&mut self, trigger: Trigger, world: &mut World, log: &mut EventLog) -> Result<()> {
        self.center_state(CenterState::Planning, world.tick, log, format!("trigger={trigger}"));
        self.center.epoch += 1;
        let epoch = self.center.epoch;
        let stats = world.stats();
        let positions = world.positions();
        let roi = RoiMask::for_grid(&world.global);
        let seed = derive_seed(self.seed, 0, epoch);
        self.center.outbox = match plan(&world.global, &roi, &mut world.rrg, &positions, &stats, &self.cfg, seed) {
            Ok(PlanOutcome::Complete) => {
                log.record(world.tick, NodeId::Center, "plan", format!("epoch={epoch} complete"));
                vec![None; positions.len()]
            }
            Ok(PlanOutcome::Plan(p)) => {
                log.record(
                    world.tick,
                    NodeId::Center,
                    "plan",
                    format!("epoch={epoch} regions={} objective={:.3}", p.graph.len(), p.objective),
                );
                let out = subtasks(&p, epoch, &stats, self.cfg.sensor_radius, &world.global);
                self.last_plan = Some(p);
                out
            }
            Err(e) => {
                log.record(world.tick, NodeId::Center, "error", format!("epoch={epoch} {e}"));
                vec![None; positions.len()]
            }
        };
        self.center.ready_at = world.tick + self.latency;
        if self.latency == 0 {
            self.dispatch(world, log)?;
        }
        Ok(())
    }

    fn dispatch(&mut self, world: &mut World, log: &mut EventLog) -> Result<()> {
        let epoch = self.center.epoch;
        for (k, sub) in std::mem::take(&mut self.center.outbox).into_iter().enumerate() {
            let detail = match &sub {
                Some(s) => format!("to=client{k} epoch={epoch} cells={} expected={:.3}", s.roi.count(), s.expected_workload),
                None => format!("to=client{k} epoch={epoch} none"),
            };
            log.record(world.tick, NodeId::Center, "dispatch", detail);
            self.bus.send(NodeId::Center, NodeId::Client(k), Payload::SubtaskDispatch { epoch, subtask: sub }, world.tick);
        }
        self.center.dispatched = epoch;
        self.center_state(CenterState::Monitoring, world.tick, log, format!("epoch={epoch}"));
        if let Some(t) = self.center.pending.take() {
            self.start_planning(t, world, log)?;
        }
        Ok(())
    }

    fn on_center_message(&mut self, env: Envelope, world: &mut World, log: &mut EventLog) -> Result<()> {
        let trigger = match (env.payload, env.sender) {
            (Payload::Progress(report), _) => replan_triggers(&report, self.center.dispatched, self.threshold),
            (Payload::ReplanRequest, NodeId::Client(client)) => Some(Trigger::Request { client }),
            _ => None,
        };
        match trigger {
            Some(t) => self.trigger(t, world, log),
            None => Ok(()),
        }
    }

    fn on_client_message(&mut self, k: usize, env: Envelope, world: &mut World, log: &mut EventLog) -> Result<()> {
        let Payload::SubtaskDispatch { epoch, subtask } = env.payload else { return Ok(()) };
        if epoch <= self.clients[k].acked {
            log.record(world.tick, NodeId::Client(k), "stale", format!("epoch={epoch}"));
            return Ok(());
        }
        self.clients[k].acked = epoch;
        log.record(world.tick, NodeId::Client(k), "recv", format!("epoch={epoch}"));
        match subtask {
            None => {
                self.clients[k].task = None;
                world.robots[k].path.clear();
                self.client_state(k, ClientState::AwaitingTask, world.tick, log);
            }
            Some(sub) => {
                let roi_unknown = sub.roi.iter().any(|c| world.global.get(c) == CellState::Unknown);
                let guide = sub.guide_path.clone();
                let guide_roi = sub.roi.clone();
                let remaining = sub.expected_workload;
                self.clients[k].task = Some(ActiveTask { subtask: sub, explored_cells: 0, remaining, roi_unknown });
                self.clients[k].backoff = 0;
                if !roi_unknown {
                    return self.finish(k, TaskStatus::Done, world, log);
                }
                let keeps_goal = self.clients[k].state == ClientState::Exploring
                    && world.robots[k].path.back().is_some_and(|&g| sees_unknown_roi(&world.global, &guide_roi, g, self.cfg.sensor_radius));
                if keeps_goal {
                    return Ok(());
                }
                self.client_state(k, ClientState::Transferring, world.tick, log);
                if world.follow(k, &guide).is_err() {
                    world.robots[k].path.clear();
                }
            }
        }
        Ok(())
    }

    fn finish(&mut self, k: usize, status: TaskStatus, world: &mut World, log: &mut EventLog) -> Result<()> {
        let Some(task) = self.clients[k].task.take() else { return Ok(()) };
        world.robots[k].path.clear();
        log.record(world.tick, NodeId::Client(k), status.to_string().as_str(), format!("epoch={}", task.subtask.epoch));
        let report = self.report(k, &task, status, world);
        self.bus.send(NodeId::Client(k), NodeId::Center, Payload::Progress(report), world.tick);
        self.client_state(k, ClientState::AwaitingTask, world.tick, log);
        Ok(())
    }

    fn report(&self, k: usize, task: &ActiveTask, status: TaskStatus, world: &World) -> ProgressReport {
        let area = task.explored_cells as f64 * world.global.cell_area();
        ProgressReport {
            client: k,
            w_explored: task.subtask.rate * area,
            w_remaining: task.remaining,
            w_expected: task.subtask.expected_workload,
            epoch: task.subtask.epoch,
            status,
        }
    }

    /// Local refinement: partition the ROI, order its regions, head for
    /// the first one.
    fn local_replan(&mut self, k: usize, world: &mut World, log: &mut EventLog) -> Result<()> {
        let Some(task) = self.clients[k].task.as_mut() else { return Ok(()) };
        task.roi_unknown = task.subtask.roi.iter().any(|c| world.global.get(c) == CellState::Unknown);
        if !task.roi_unknown {
            return self.finish(k, TaskStatus::Done, world, log);
        }
        let roi = task.subtask.roi.clone();
        self.clients[k].local_plans += 1;
        let seed = derive_seed(self.seed, 1 + k as u64, self.clients[k].local_plans);
        let pos = world.robots[k].position();
        let stats = world.stats();
        let ctx = match build_context(&world.global, &roi, &mut world.rrg, &[pos], &stats, &self.cfg, seed)? {
            Some(ctx) if !ctx.graph.is_empty() => ctx,
            _ => return self.finish(k, TaskStatus::Done, world, log),
        };
        let order = local_order(&ctx, &self.cfg)?;
        if let Some(task) = self.clients[k].task.as_mut() {
            task.remaining = ctx.graph.total_weight();
        }
        for &j in &order {
            let goal = region_goal(&world.global, &ctx.graph.vertices[j], pos);
            if world.navigate(k, goal).is_ok() {
                log.record(world.tick, NodeId::Client(k), "goal", format!("{:.3} {:.3} regions={}", goal.x, goal.y, order.len()));
                self.client_state(k, ClientState::Exploring, world.tick, log);
                return Ok(());
            }
        }
        self.finish(k, TaskStatus::Failed, world, log)
    }
}

impl Controller for Hierarchical {
    fn on_tick(&mut self, world: &mut World, log: &mut EventLog) -> Result<()> {
        let now = world.tick;
        if self.center.state == CenterState::Idle {
            return self.start_planning(Trigger::Manual, world, log);
        }
        for env in self.bus.deliver_due(now) {
            match env.receiver {
                NodeId::Center => self.on_center_message(env, world, log)?,
                NodeId::Client(k) => self.on_client_message(k, env, world, log)?,
            }
        }
        for k in 0..self.clients.len() {
            if let Some(task) = self.clients[k].task.as_mut() {
                task.explored_cells += world.fresh[k].iter().filter(|&&c| task.subtask.roi.contains(c)).count();
            }
            let active = matches!(self.clients[k].state, ClientState::Transferring | ClientState::Exploring);
            if active && world.robots[k].path.is_empty() {
                self.local_replan(k, world, log)?;
            }
        }
        if now % self.progress_every == 0 {
            for k in 0..self.clients.len() {
                if let Some(task) = &self.clients[k].task {
                    let report = self.report(k, task, TaskStatus::Executing, world);
                    self.bus.send(NodeId::Client(k), NodeId::Center, Payload::Progress(report), now);
                }
            }
        }
        // Clients left without work ask for some, doubling the wait each time.
        for k in 0..self.clients.len() {
            let c = &mut self.clients[k];
            if c.task.is_some() || c.state == ClientState::Idle {
                c.waiting_since = None;
                continue;
            }
            let since = *c.waiting_since.get_or_insert(now);
            if now - since >= self.progress_every << c.backoff {
                c.waiting_since = Some(now);
                c.backoff = (c.backoff + 1).min(MAX_BACKOFF);
                log.record(now, NodeId::Client(k), "request", format!("acked={}", c.acked));
                self.bus.send(NodeId::Client(k), NodeId::Center, Payload::ReplanRequest, now);
            }
        }
        if self.center.state == CenterState::Planning {
            for k in 0..self.clients.len() {
                let stalled = self.clients[k].task.as_ref().is_some_and(|t| t.roi_unknown) && !world.robots[k].is_moving();
                if stalled {
                    log.record(now, NodeId::Client(k), "idle", "stalled");
                }
            }
        }
        if self.center.state == CenterState::Planning && now >= self.center.ready_at {
            self.dispatch(world, log)?;
        }
        Ok(())
    }

    fn last_plan(&self) -> Option<&RoutePlan> {
        self.last_plan.as_ref()
    }
}

/// Counts extracted from an event log.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LogSummary {
    /// `idle` records of robots standing still with work while the center
    /// was planning.
    pub idle_while_planning: usize,
    pub idle_total: usize,
    pub plans: usize,
    pub goals: usize,
    pub errors: usize,
}

/// Scan an event log for planning intervals and idle records.
pub fn analyze_log(text: &str) -> LogSummary {
    let mut s = LogSummary::default();
    let mut planning = false;
    for line in text.lines() {
        let mut parts = line.splitn(4, ' ');
        let (_time, node, kind, detail) = (parts.next(), parts.next(), parts.next(), parts.next().unwrap_or(""));
        match (node, kind) {
            (Some("center"), Some("state")) => {
                let to = detail.split_whitespace().next().and_then(|t| t.split("->").nth(1));
                planning = to == Some("Planning");
                if planning {
                    s.plans += 1;
                }
            }
            (Some(_), Some("idle")) => {
                s.idle_total += 1;
                if planning {
                    s.idle_while_planning += 1;
                }
            }
            (Some(_), Some("goal")) => s.goals += 1,
            (Some(_), Some("error")) => s.errors += 1,
            _ => {}
        }
    }
    s
}
