//! Shared bookkeeping: the TASKS list, epoch segments and the group board.

use fixedbitset::FixedBitSet;

use crate::ids::{StationId, TaskId};
use crate::math::ceil_sqrt;

/// Segment `(offset, length)` for each epoch position `1..=n` over `m` tasks.
/// Position `i` starts at `i(i-1)/2 mod m` and spans `i` tasks, so dense
/// epochs tile the list and sparse ones cover its first `n(n+1)/2` entries.
pub fn segments(n: usize, m: usize) -> Vec<(usize, usize)> {
    if m == 0 {
        return vec![(0, 0); n];
    }
    (1..=n).map(|i| ((i * (i - 1) / 2) % m, i)).collect()
}

pub(crate) fn is_dense(n: usize, m: usize) -> bool {
    n * (n + 1) / 2 >= m
}

/// Outstanding tasks in ascending id order.
#[derive(Clone, Debug)]
pub(crate) struct TaskList {
    order: Vec<TaskId>,
}

impl TaskList {
    pub fn full(t: usize) -> Self {
        TaskList {
            order: (0..t).map(TaskId::from_slot).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn as_slice(&self) -> &[TaskId] {
        &self.order
    }

    pub fn at(&self, i: usize) -> TaskId {
        self.order[i]
    }

    /// Removes every outstanding task in `done`; returns the removed ones.
    pub fn remove_set(&mut self, done: &FixedBitSet) -> Vec<TaskId> {
        let mut removed = Vec::new();
        self.order.retain(|t| {
            if done.contains(t.slot()) {
                removed.push(*t);
                false
            } else {
                true
            }
        });
        removed
    }

    pub fn clear(&mut self) -> Vec<TaskId> {
        std::mem::take(&mut self.order)
    }

    /// First task at or cyclically after `cursor` that `skip` rejects.
    pub fn next_from(&self, cursor: TaskId, skip: impl Fn(TaskId) -> bool) -> Option<TaskId> {
        let start = self.order.partition_point(|t| *t < cursor);
        self.order[start..]
            .iter()
            .chain(&self.order[..start])
            .copied()
            .find(|t| !skip(*t))
    }

    /// The task after `task` in cyclic order.
    pub fn successor(&self, task: TaskId) -> TaskId {
        let i = self.order.partition_point(|t| *t <= task);
        match self.order.get(i).or_else(|| self.order.first()) {
            Some(t) => *t,
            None => task,
        }
    }
}

/// Position within one epoch: which slot transmits next and how much of the
/// epoch-start list the processed segments span.
#[derive(Clone, Debug)]
pub(crate) struct EpochCursor {
    pub units: usize,
    pub start_tasks: usize,
    pub dense: bool,
    pub slot: usize,
    covered: usize,
    limit: Option<usize>,
    pub phases: usize,
    pub heard: usize,
}

impl EpochCursor {
    pub fn new(units: usize, start_tasks: usize, limit: Option<usize>) -> Self {
        EpochCursor {
            units,
            start_tasks,
            dense: is_dense(units, start_tasks),
            slot: 0,
            covered: 0,
            limit,
            phases: 0,
            heard: 0,
        }
    }

    /// Moves to the next slot; true when the epoch is over.
    pub fn advance(&mut self) -> bool {
        self.slot += 1;
        self.phases += 1;
        self.covered += self.slot;
        self.slot >= self.units
            || self.covered >= self.start_tasks
            || self.limit.is_some_and(|l| self.phases >= l)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Group {
    pub key: u32,
    pub members: Vec<StationId>,
    /// Tasks the whole group has performed since it was formed.
    pub performed: FixedBitSet,
    pub cursor: TaskId,
}

/// GROUPS plus the per-group task state. All members of a group act in
/// lockstep, so the group's record is what each surviving member did.
#[derive(Clone, Debug)]
pub(crate) struct GroupBoard {
    pub t: usize,
    pub groups: Vec<Group>,
    group_of: Vec<Option<u32>>,
    next_key: u32,
    pub tasks: TaskList,
    pub epoch: EpochCursor,
    order: Vec<u32>,
    plan: Vec<Option<TaskId>>,
}

impl GroupBoard {
    pub fn new(p: usize, t: usize, g: usize) -> Self {
        let mut board = GroupBoard {
            t,
            groups: Vec::new(),
            group_of: vec![None; p],
            next_key: 0,
            tasks: TaskList::full(t),
            epoch: EpochCursor::new(0, t, None),
            order: Vec::new(),
            plan: Vec::new(),
        };
        board.partition(&crate::ids::all_stations(p), g);
        board
    }

    /// Station at position `j` of `stations` goes to group `j mod g`.
    pub fn partition(&mut self, stations: &[StationId], g: usize) {
        let g = g.clamp(1, stations.len().max(1));
        for slot in self.group_of.iter_mut() {
            *slot = None;
        }
        let mut groups: Vec<Group> = (0..g)
            .map(|j| Group {
                key: self.next_key + j as u32,
                members: Vec::new(),
                performed: FixedBitSet::with_capacity(self.t),
                cursor: TaskId(1),
            })
            .collect();
        self.next_key += g as u32;
        for (j, &s) in stations.iter().enumerate() {
            let grp = &mut groups[j % g];
            grp.members.push(s);
            self.group_of[s.slot()] = Some(grp.key);
        }
        groups.retain(|grp| !grp.members.is_empty());
        self.groups = groups;
    }

    /// Regroups the given stations into `min(ceil(sqrt|TASKS|), s)` groups,
    /// or at least `min_groups`.
    pub fn regroup(&mut self, stations: &[StationId], min_groups: usize) {
        let g = (ceil_sqrt(self.tasks.len() as u64) as usize)
            .max(min_groups)
            .min(stations.len());
        self.partition(stations, g);
    }

    pub fn all_members(&self) -> Vec<StationId> {
        let mut all: Vec<StationId> = self
            .groups
            .iter()
            .flat_map(|g| g.members.iter().copied())
            .collect();
        all.sort();
        all
    }

    pub fn group_key_of(&self, s: StationId) -> Option<u32> {
        self.group_of.get(s.slot()).copied().flatten()
    }

    pub fn group(&self, key: u32) -> Option<&Group> {
        self.groups.iter().find(|g| g.key == key)
    }

    fn group_index(&self, key: u32) -> Option<usize> {
        self.groups.iter().position(|g| g.key == key)
    }

    /// Starts an epoch: group at position `i` gets segment `i` of TASKS.
    pub fn begin_epoch(&mut self) -> (usize, usize, bool) {
        let m = self.tasks.len();
        self.epoch = EpochCursor::new(self.groups.len(), m, None);
        self.order = self.groups.iter().map(|g| g.key).collect();
        if m > 0 {
            for (grp, (offset, _)) in self.groups.iter_mut().zip(segments(self.order.len(), m)) {
                grp.cursor = self.tasks.at(offset);
            }
        }
        (self.epoch.units, m, self.epoch.dense)
    }

    /// Key of the group whose slot it is.
    pub fn scheduled(&self) -> Option<u32> {
        self.order.get(self.epoch.slot).copied()
    }

    /// Computes this round's task for every group.
    pub fn plan_perform(&mut self) {
        let tasks = &self.tasks;
        self.plan = self
            .groups
            .iter()
            .map(|g| tasks.next_from(g.cursor, |x| g.performed.contains(x.slot())))
            .collect();
    }

    pub fn planned_task_of(&self, s: StationId) -> Option<TaskId> {
        let key = self.group_key_of(s)?;
        let idx = self.group_index(key)?;
        self.plan.get(idx).copied().flatten()
    }

    /// Records the planned tasks as done by their groups.
    pub fn apply_perform(&mut self) {
        let plan = std::mem::take(&mut self.plan);
        for (grp, task) in self.groups.iter_mut().zip(plan) {
            if let Some(x) = task {
                grp.performed.insert(x.slot());
                grp.cursor = self.tasks.successor(x);
            }
        }
    }

    /// Removes the group's performed tasks from TASKS.
    pub fn confirm(&mut self, key: u32) -> Vec<TaskId> {
        match self.group_index(key) {
            Some(i) => {
                let done = self.groups[i].performed.clone();
                self.tasks.remove_set(&done)
            }
            None => Vec::new(),
        }
    }

    pub fn remove_group(&mut self, key: u32) -> Vec<StationId> {
        match self.group_index(key) {
            Some(i) => {
                let grp = self.groups.remove(i);
                for s in &grp.members {
                    self.group_of[s.slot()] = None;
                }
                grp.members
            }
            None => Vec::new(),
        }
    }

    pub fn remove_station(&mut self, s: StationId) {
        if let Some(key) = self.group_key_of(s) {
            self.group_of[s.slot()] = None;
            if let Some(i) = self.group_index(key) {
                self.groups[i].members.retain(|&m| m != s);
            }
        }
    }

    pub fn members_of(&self, key: u32) -> &[StationId] {
        self.group(key).map(|g| g.members.as_slice()).unwrap_or(&[])
    }

    pub fn view(&self) -> Vec<Vec<StationId>> {
        self.groups.iter().map(|g| g.members.clone()).collect()
    }
}
