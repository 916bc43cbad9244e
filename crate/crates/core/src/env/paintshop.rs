//! Paint-shop buffer scheduling.
//!
//! Cars arrive in a fixed colour sequence and pass through a buffer of `lanes`
//! FIFO lanes, each `width` cars deep, before reaching the paint shop. Every step
//! either stores the next incoming car into a lane or retrieves the exit-side car
//! of a lane into the outgoing sequence. The goal is to minimise colour changes in
//! the outgoing sequence.
//!
//! Actions are zero-based: `0..lanes` retrieve from lane `a`, `lanes..2*lanes`
//! store into lane `a - lanes`. Within a lane, position `0` is the entry side
//! (`B_{i,1}`) and position `width - 1` the exit side (`B_{i,W}`); occupied cells
//! always form a contiguous block ending at the exit side.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::masking::{conjoin, prioritize, Mask, MaskStack};
use crate::mdp::{ActionSpace, Environment, Info, Observation, StepOutcome};

/// Colour code; `0` means "empty" / "no colour".
pub type Color = u8;

#[derive(Debug, Clone, PartialEq)]
pub struct PaintShopConfig {
    pub lanes: usize,
    pub width: usize,
    pub colors: usize,
    pub lookahead: usize,
    pub sequence_length: usize,
    pub invalid_penalty: f64,
    pub retrieval_bonus: f64,
    /// Episodes are truncated after this many steps (invalid actions consume no
    /// cars, so an unmasked policy could otherwise loop forever).
    pub step_cap: usize,
}

impl Default for PaintShopConfig {
    fn default() -> Self {
        Self::new(4, 4, 10)
    }
}

impl PaintShopConfig {
    pub fn new(lanes: usize, width: usize, colors: usize) -> Self {
        Self {
            lanes,
            width,
            colors,
            lookahead: 5,
            sequence_length: 100,
            invalid_penalty: -10.0,
            retrieval_bonus: 1.0,
            step_cap: 300,
        }
    }

    pub fn with_sequence_length(mut self, n: usize) -> Self {
        self.sequence_length = n;
        self.step_cap = 3 * n;
        self
    }

    pub fn action_count(&self) -> usize {
        2 * self.lanes
    }

    pub fn observation_dim(&self) -> usize {
        (self.lanes * self.width + self.lookahead + 1) * (self.colors + 1)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.lanes == 0 || self.width == 0 {
            return Err("lanes and width must be at least 1".into());
        }
        if self.colors == 0 || self.colors > Color::MAX as usize {
            return Err(format!("colors must be in 1..=255, got {}", self.colors));
        }
        if self.lookahead == 0 {
            return Err("lookahead must be at least 1".into());
        }
        if self.step_cap < 2 * self.sequence_length {
            return Err("step_cap must leave room for storing and retrieving every car".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaintShopAction {
    Retrieve(usize),
    Store(usize),
}

impl PaintShopAction {
    pub fn from_index(index: usize, lanes: usize) -> Self {
        assert!(index < 2 * lanes, "action {index} out of range");
        if index < lanes {
            Self::Retrieve(index)
        } else {
            Self::Store(index - lanes)
        }
    }

    pub fn index(self, lanes: usize) -> usize {
        match self {
            Self::Retrieve(lane) => lane,
            Self::Store(lane) => lane + lanes,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PaintShopState {
    lanes: usize,
    width: usize,
    colors: usize,
    lookahead: usize,
    buffer: Vec<Color>,
    incoming: Vec<Color>,
    next: usize,
    current_color: Color,
    outgoing: Vec<Color>,
    color_changes: usize,
    steps: usize,
}

impl fmt::Debug for PaintShopState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p={} next={:?}", self.current_color, self.lookahead_colors())?;
        for lane in 0..self.lanes {
            writeln!(f, "  lane {lane}: {:?}", self.lane(lane))?;
        }
        Ok(())
    }
}

impl ActionSpace for PaintShopState {
    fn action_count(&self) -> usize {
        2 * self.lanes
    }
}

impl PaintShopState {
    pub fn new(config: &PaintShopConfig, incoming: Vec<Color>) -> Self {
        Self {
            lanes: config.lanes,
            width: config.width,
            colors: config.colors,
            lookahead: config.lookahead,
            buffer: vec![0; config.lanes * config.width],
            incoming,
            next: 0,
            current_color: 0,
            outgoing: Vec::new(),
            color_changes: 0,
            steps: 0,
        }
    }

    /// Builds an arbitrary (possibly mid-episode) state. Each lane is given
    /// entry-to-exit and must be a contiguous block ending at the exit side.
    pub fn from_parts(
        config: &PaintShopConfig,
        lanes: &[Vec<Color>],
        remaining_incoming: Vec<Color>,
        current_color: Color,
    ) -> Self {
        assert_eq!(lanes.len(), config.lanes);
        let mut buffer = Vec::with_capacity(config.lanes * config.width);
        for lane in lanes {
            assert_eq!(lane.len(), config.width);
            buffer.extend_from_slice(lane);
        }
        let state = Self {
            lanes: config.lanes,
            width: config.width,
            colors: config.colors,
            lookahead: config.lookahead,
            buffer,
            incoming: remaining_incoming,
            next: 0,
            current_color,
            outgoing: Vec::new(),
            color_changes: 0,
            steps: 0,
        };
        assert!(state.lanes_contiguous(), "lanes must be exit-justified");
        state
    }

    pub fn lanes(&self) -> usize {
        self.lanes
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Cell `B[lane][pos]`, `pos = 0` entry side.
    pub fn cell(&self, lane: usize, pos: usize) -> Color {
        self.buffer[lane * self.width + pos]
    }

    pub fn lane(&self, lane: usize) -> &[Color] {
        &self.buffer[lane * self.width..(lane + 1) * self.width]
    }

    pub fn buffer(&self) -> &[Color] {
        &self.buffer
    }

    /// Exit-side cell `B_{i,W}`: the car that a retrieval would take (0 if empty).
    pub fn exit_car(&self, lane: usize) -> Color {
        self.cell(lane, self.width - 1)
    }

    /// Entry-side cell `B_{i,1}`: non-zero iff the lane is full.
    pub fn entry_cell(&self, lane: usize) -> Color {
        self.cell(lane, 0)
    }

    pub fn lane_len(&self, lane: usize) -> usize {
        self.lane(lane).iter().filter(|&&c| c != 0).count()
    }

    pub fn is_lane_empty(&self, lane: usize) -> bool {
        self.exit_car(lane) == 0
    }

    pub fn is_lane_full(&self, lane: usize) -> bool {
        self.entry_cell(lane) != 0
    }

    /// Most recently stored car of a lane, i.e. the occupied cell nearest the entry.
    pub fn last_stored(&self, lane: usize) -> Option<Color> {
        self.lane(lane).iter().copied().find(|&c| c != 0)
    }

    /// `e_{t,1}`: the next incoming colour, 0 when the sequence is exhausted.
    pub fn next_color(&self) -> Color {
        self.incoming.get(self.next).copied().unwrap_or(0)
    }

    /// `e_{t,1..K}`, zero-padded past the end of the sequence.
    pub fn lookahead_colors(&self) -> Vec<Color> {
        (0..self.lookahead)
            .map(|k| self.incoming.get(self.next + k).copied().unwrap_or(0))
            .collect()
    }

    pub fn remaining_incoming(&self) -> &[Color] {
        &self.incoming[self.next..]
    }

    /// `p_t`: colour of the last retrieved car, 0 before the first retrieval.
    pub fn current_color(&self) -> Color {
        self.current_color
    }

    pub fn outgoing(&self) -> &[Color] {
        &self.outgoing
    }

    pub fn retrieved(&self) -> usize {
        self.outgoing.len()
    }

    pub fn in_buffer(&self) -> usize {
        self.buffer.iter().filter(|&&c| c != 0).count()
    }

    pub fn total_cars(&self) -> usize {
        self.incoming.len()
    }

    pub fn color_changes(&self) -> usize {
        self.color_changes
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Every car has left the buffer.
    pub fn is_complete(&self) -> bool {
        self.next == self.incoming.len() && self.in_buffer() == 0
    }

    pub fn lanes_contiguous(&self) -> bool {
        (0..self.lanes).all(|lane| {
            let cells = self.lane(lane);
            let first = cells.iter().position(|&c| c != 0).unwrap_or(self.width);
            cells[..first].iter().all(|&c| c == 0) && cells[first..].iter().all(|&c| c != 0)
        })
    }

    pub fn is_valid(&self, action: usize) -> bool {
        match PaintShopAction::from_index(action, self.lanes) {
            PaintShopAction::Retrieve(lane) => !self.is_lane_empty(lane),
            PaintShopAction::Store(lane) => !self.is_lane_full(lane) && self.next_color() != 0,
        }
    }

    /// Applies `action` and returns `(reward_kind, color_change)`.
    fn apply(&mut self, action: usize) -> Transition {
        self.steps += 1;
        if !self.is_valid(action) {
            return Transition::Invalid;
        }
        match PaintShopAction::from_index(action, self.lanes) {
            PaintShopAction::Retrieve(lane) => {
                let base = lane * self.width;
                let car = self.buffer[base + self.width - 1];
                self.buffer.copy_within(base..base + self.width - 1, base + 1);
                self.buffer[base] = 0;
                self.outgoing.push(car);
                let previous = self.current_color;
                self.current_color = car;
                if car == previous {
                    Transition::RetrieveSameColor
                } else {
                    let change = previous != 0;
                    if change {
                        self.color_changes += 1;
                    }
                    Transition::RetrieveNewColor { change }
                }
            }
            PaintShopAction::Store(lane) => {
                let free = self.width - self.lane_len(lane);
                self.buffer[lane * self.width + free - 1] = self.incoming[self.next];
                self.next += 1;
                Transition::Store
            }
        }
    }
}

enum Transition {
    Invalid,
    Store,
    RetrieveSameColor,
    RetrieveNewColor { change: bool },
}

/// Generates an incoming sequence with colours drawn i.i.d. uniformly from `1..=C`.
pub fn generate_instance(seed: u64, config: &PaintShopConfig) -> Vec<Color> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..config.sequence_length)
        .map(|_| rng.random_range(1..=config.colors) as Color)
        .collect()
}

/// One-hot encoding of buffer cells, the next `K` colours and `p_t`, each over the
/// alphabet `0..=C`.
pub fn encode(state: &PaintShopState) -> Observation {
    let alphabet = state.colors + 1;
    let blocks = state.buffer.len() + state.lookahead + 1;
    let mut obs = vec![0.0; blocks * alphabet];
    let values = state
        .buffer
        .iter()
        .copied()
        .chain(state.lookahead_colors())
        .chain(std::iter::once(state.current_color));
    for (block, value) in values.enumerate() {
        obs[block * alphabet + value as usize] = 1.0;
    }
    obs
}

#[derive(Debug, Clone)]
enum InstanceSource {
    Random,
    Fixed(Vec<Color>),
}

#[derive(Debug, Clone)]
pub struct PaintShopEnv {
    config: PaintShopConfig,
    source: InstanceSource,
    state: PaintShopState,
    done: bool,
}

impl PaintShopEnv {
    /// An environment that draws a fresh random instance on every reset.
    pub fn new(config: PaintShopConfig) -> Self {
        let state = PaintShopState::new(&config, Vec::new());
        Self {
            config,
            source: InstanceSource::Random,
            state,
            done: true,
        }
    }

    /// An environment that replays the same incoming sequence on every reset.
    pub fn with_instance(config: PaintShopConfig, sequence: Vec<Color>) -> Self {
        let mut env = Self::new(config);
        env.source = InstanceSource::Fixed(sequence);
        env
    }

    pub fn config(&self) -> &PaintShopConfig {
        &self.config
    }

    pub fn reset_with_sequence(&mut self, sequence: Vec<Color>) -> Observation {
        assert!(
            sequence.iter().all(|&c| c >= 1 && c as usize <= self.config.colors),
            "instance colours must lie in 1..=C"
        );
        self.state = PaintShopState::new(&self.config, sequence);
        self.done = self.state.is_complete();
        encode(&self.state)
    }
}

impl Environment for PaintShopEnv {
    type State = PaintShopState;

    fn action_count(&self) -> usize {
        self.config.action_count()
    }

    fn observation_dim(&self) -> usize {
        self.config.observation_dim()
    }

    fn horizon_limit(&self) -> Option<usize> {
        Some(self.config.step_cap)
    }

    fn reset(&mut self, seed: u64) -> Observation {
        let sequence = match &self.source {
            InstanceSource::Random => generate_instance(seed, &self.config),
            InstanceSource::Fixed(seq) => seq.clone(),
        };
        self.reset_with_sequence(sequence)
    }

    fn step(&mut self, action: usize) -> StepOutcome {
        assert!(!self.done, "step called on a finished episode");
        assert!(action < self.action_count(), "action {action} out of range");
        let (reward, mut info) = match self.state.apply(action) {
            Transition::Invalid => (self.config.invalid_penalty, Info::new().with("invalid", 1.0)),
            Transition::Store => (0.0, Info::new()),
            Transition::RetrieveSameColor => (self.config.retrieval_bonus, Info::new()),
            Transition::RetrieveNewColor { change } => (
                0.0,
                Info::new().with("color_change", if change { 1.0 } else { 0.0 }),
            ),
        };
        let complete = self.state.is_complete();
        let truncated = !complete && self.state.steps >= self.config.step_cap;
        if truncated {
            info.insert("truncated", 1.0);
        }
        self.done = complete || truncated;
        StepOutcome {
            observation: encode(&self.state),
            reward,
            done: self.done,
            info,
        }
    }

    fn state(&self) -> &PaintShopState {
        &self.state
    }

    fn observe(&self) -> Observation {
        encode(&self.state)
    }

    fn is_done(&self) -> bool {
        self.done
    }
}

// ---------------------------------------------------------------------------
// Masks

/// `m^INV`: retrieval from non-empty lanes, storage into non-full lanes while cars
/// remain in the incoming sequence.
pub fn mask_inv() -> Mask<PaintShopState> {
    Mask::from_predicate("inv", |s: &PaintShopState, a| s.is_valid(a))
}

fn greedy_retrieval_possible(s: &PaintShopState) -> bool {
    s.current_color != 0 && (0..s.lanes).any(|lane| s.exit_car(lane) == s.current_color)
}

/// `m^GR`: whenever some lane's exit car matches `p_t`, only those retrievals are
/// allowed. Inactive before the first retrieval (`p_t = 0` matches nothing).
pub fn mask_gr() -> Mask<PaintShopState> {
    Mask::from_predicate("gr", |s: &PaintShopState, a| {
        if !greedy_retrieval_possible(s) {
            return true;
        }
        a < s.lanes && s.exit_car(a) == s.current_color
    })
}

fn fast_track_possible(s: &PaintShopState) -> bool {
    let e = s.next_color();
    e != 0 && e == s.current_color && (0..s.lanes).any(|lane| s.is_lane_empty(lane))
}

/// `m^FT`: when the next incoming car has colour `p_t` and an empty lane exists,
/// only storing it into an empty lane is allowed (it can be retrieved next step
/// without a colour change).
pub fn mask_ft() -> Mask<PaintShopState> {
    Mask::from_predicate("ft", |s: &PaintShopState, a| {
        if !fast_track_possible(s) {
            return true;
        }
        a >= s.lanes && s.is_lane_empty(a - s.lanes)
    })
}

fn greedy_storage_lane(s: &PaintShopState, lane: usize) -> bool {
    let e = s.next_color();
    e != 0 && !s.is_lane_full(lane) && s.last_stored(lane) == Some(e)
}

/// `m^GS`: when some non-full lane's most recently stored car matches the next
/// incoming colour, only storing into such lanes is allowed.
pub fn mask_gs() -> Mask<PaintShopState> {
    Mask::from_predicate("gs", |s: &PaintShopState, a| {
        if !(0..s.lanes).any(|lane| greedy_storage_lane(s, lane)) {
            return true;
        }
        a >= s.lanes && greedy_storage_lane(s, a - s.lanes)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaskLevel {
    None,
    Inv,
    InvGr,
    InvGrFt,
    All,
}

impl MaskLevel {
    pub const ALL_LEVELS: [MaskLevel; 5] = [
        MaskLevel::None,
        MaskLevel::Inv,
        MaskLevel::InvGr,
        MaskLevel::InvGrFt,
        MaskLevel::All,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Inv => "inv",
            Self::InvGr => "inv+gr",
            Self::InvGrFt => "inv+gr+ft",
            Self::All => "all",
        }
    }
}

impl std::str::FromStr for MaskLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL_LEVELS
            .into_iter()
            .find(|level| level.as_str() == s)
            .ok_or_else(|| {
                format!("unknown paint-shop mask level `{s}` (expected none, inv, inv+gr, inv+gr+ft or all)")
            })
    }
}

impl fmt::Display for MaskLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The mask of a given level:
///
/// - `inv`: `m^INV`
/// - `inv+gr`: `m^INV ⊕ m^GR`
/// - `inv+gr+ft`: `m^INV ⊕ (m^GR ≻ m^FT)`
/// - `all`: `m^INV ⊕ ((m^GR ≻ m^FT) ≻ m^GS)`
pub fn combined_mask(level: MaskLevel) -> Mask<PaintShopState> {
    let inv = mask_inv();
    let mask = match level {
        MaskLevel::None => return Mask::all_allow(),
        MaskLevel::Inv => inv,
        MaskLevel::InvGr => conjoin(&inv, &mask_gr()),
        MaskLevel::InvGrFt => conjoin(&inv, &prioritize(&mask_gr(), &mask_ft())),
        MaskLevel::All => conjoin(
            &inv,
            &prioritize(&prioritize(&mask_gr(), &mask_ft()), &mask_gs()),
        ),
    };
    mask.renamed(level.as_str())
}

pub fn mask_stack(level: MaskLevel) -> MaskStack<PaintShopState> {
    let validity = match level {
        MaskLevel::None => Mask::all_allow(),
        _ => mask_inv(),
    };
    MaskStack::new(combined_mask(level), validity)
}

// ---------------------------------------------------------------------------
// Greedy heuristic and metric

/// Greedy retrieval, then fast-track, then greedy storage, each choosing the
/// lowest lane index; otherwise a uniformly random valid action.
pub fn greedy_heuristic<R: Rng + ?Sized>(state: &PaintShopState, rng: &mut R) -> usize {
    let lanes = state.lanes;
    if greedy_retrieval_possible(state) {
        if let Some(lane) = (0..lanes).find(|&l| state.exit_car(l) == state.current_color) {
            return PaintShopAction::Retrieve(lane).index(lanes);
        }
    }
    if fast_track_possible(state) {
        if let Some(lane) = (0..lanes).find(|&l| state.is_lane_empty(l)) {
            return PaintShopAction::Store(lane).index(lanes);
        }
    }
    if let Some(lane) = (0..lanes).find(|&l| greedy_storage_lane(state, l)) {
        return PaintShopAction::Store(lane).index(lanes);
    }
    let valid: Vec<usize> = (0..2 * lanes).filter(|&a| state.is_valid(a)).collect();
    assert!(!valid.is_empty(), "greedy heuristic needs at least one valid action");
    valid[rng.random_range(0..valid.len())]
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PaintShopError {
    #[error("episode incomplete: {retrieved} of {total} cars retrieved")]
    IncompleteEpisode { retrieved: usize, total: usize },
    #[error("instance file line {line}: {reason}")]
    BadInstance { line: usize, reason: String },
}

/// Number of retrievals whose colour differs from the previous retrieval (the
/// first retrieval is not a change). `total_cars` is the instance length and is
/// used to reject incomplete episodes.
pub fn count_color_changes(outgoing: &[Color], total_cars: usize) -> Result<usize, PaintShopError> {
    if outgoing.len() != total_cars {
        return Err(PaintShopError::IncompleteEpisode {
            retrieved: outgoing.len(),
            total: total_cars,
        });
    }
    Ok(outgoing.windows(2).filter(|w| w[0] != w[1]).count())
}

/// Colour changes for an evaluation episode. A truncated episode is charged one
/// change per car still in the buffer or the incoming queue (worst-case completion).
pub fn evaluation_color_changes(state: &PaintShopState) -> usize {
    match count_color_changes(state.outgoing(), state.total_cars()) {
        Ok(n) => n,
        Err(_) => {
            let observed = state.outgoing().windows(2).filter(|w| w[0] != w[1]).count();
            observed + state.total_cars() - state.retrieved()
        }
    }
}

pub fn write_instance(path: &Path, sequence: &[Color]) -> io::Result<()> {
    let mut text = String::with_capacity(sequence.len() * 3);
    for c in sequence {
        text.push_str(&c.to_string());
        text.push('\n');
    }
    fs::write(path, text)
}

/// Parses an instance file: one integer colour per line, blank lines ignored.
pub fn parse_instance(text: &str, colors: usize) -> Result<Vec<Color>, PaintShopError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: usize = line.parse().map_err(|e| PaintShopError::BadInstance {
            line: i + 1,
            reason: format!("{e}"),
        })?;
        if value == 0 || value > colors {
            return Err(PaintShopError::BadInstance {
                line: i + 1,
                reason: format!("colour {value} outside 1..={colors}"),
            });
        }
        out.push(value as Color);
    }
    Ok(out)
}
