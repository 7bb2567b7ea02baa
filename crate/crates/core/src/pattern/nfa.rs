use super::bitmap::{BehaviourBitmap, CaseTrace};
use super::{Class, Regex};

#[derive(Clone, Debug)]
enum State {
    Class(Class, usize),
    Split(usize, usize),
    Jump(usize),
    AssertStart(usize),
    AssertEnd(usize),
    Match,
}

/// Thompson automaton over event classes.
#[derive(Clone, Debug)]
pub struct Nfa {
    states: Vec<State>,
    start: usize,
}

const HOLE: usize = usize::MAX;

impl Nfa {
    pub fn build(regex: &Regex) -> Nfa {
        let mut b = Builder { states: Vec::new() };
        let frag = b.build(regex);
        let accept = b.push(State::Match);
        b.patch(&frag.outs, accept);
        Nfa { states: b.states, start: frag.start }
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    /// Whether some window of the trace is accepted. Every position seeds a
    /// new thread, so the search is unanchored unless assertions pin it.
    pub fn matches(&self, trace: CaseTrace, bitmaps: &BehaviourBitmap) -> bool {
        let n = trace.len;
        let mut sim = Sim::new(self.states.len());
        let mut current = Vec::new();
        let mut next = Vec::new();
        for pos in 0..=n {
            sim.generation += 1;
            // Threads carried over from the previous step were already marked
            // in the previous generation; re-add them under this one.
            let carried = std::mem::take(&mut next);
            current.clear();
            for s in carried {
                if self.add(&mut sim, &mut current, s, pos, n) {
                    return true;
                }
            }
            if self.add(&mut sim, &mut current, self.start, pos, n) {
                return true;
            }
            if pos == n {
                break;
            }
            for &s in &current {
                if let State::Class(class, out) = &self.states[s] {
                    if class.contains(trace.start + pos, bitmaps) {
                        next.push(*out);
                    }
                }
            }
        }
        false
    }

    /// Adds the ε-closure of `s` at `pos`; returns true when it reaches the
    /// accepting state.
    fn add(&self, sim: &mut Sim, list: &mut Vec<usize>, s: usize, pos: usize, n: usize) -> bool {
        let mut stack = vec![s];
        while let Some(s) = stack.pop() {
            if sim.marks[s] == sim.generation {
                continue;
            }
            sim.marks[s] = sim.generation;
            match &self.states[s] {
                State::Match => return true,
                State::Class(..) => list.push(s),
                State::Split(a, b) => {
                    stack.push(*b);
                    stack.push(*a);
                }
                State::Jump(a) => stack.push(*a),
                State::AssertStart(a) => {
                    if pos == 0 {
                        stack.push(*a);
                    }
                }
                State::AssertEnd(a) => {
                    if pos == n {
                        stack.push(*a);
                    }
                }
            }
        }
        false
    }
}

struct Sim {
    marks: Vec<u64>,
    generation: u64,
}

impl Sim {
    fn new(states: usize) -> Sim {
        Sim { marks: vec![0; states], generation: 0 }
    }
}

struct Frag {
    start: usize,
    /// Dangling out-edges to patch: (state, which edge).
    outs: Vec<(usize, u8)>,
}

struct Builder {
    states: Vec<State>,
}

impl Builder {
    fn push(&mut self, s: State) -> usize {
        self.states.push(s);
        self.states.len() - 1
    }

    fn patch(&mut self, outs: &[(usize, u8)], target: usize) {
        for &(s, edge) in outs {
            match (&mut self.states[s], edge) {
                (State::Class(_, o), _)
                | (State::Jump(o), _)
                | (State::AssertStart(o), _)
                | (State::AssertEnd(o), _)
                | (State::Split(o, _), 0) => *o = target,
                (State::Split(_, o), _) => *o = target,
                (State::Match, _) => unreachable!("accepting state has no out-edge"),
            }
        }
    }

    fn build(&mut self, r: &Regex) -> Frag {
        match r {
            Regex::Empty => {
                let s = self.push(State::Jump(HOLE));
                Frag { start: s, outs: vec![(s, 0)] }
            }
            Regex::Class(c) => {
                let s = self.push(State::Class(c.clone(), HOLE));
                Frag { start: s, outs: vec![(s, 0)] }
            }
            Regex::AssertStart => {
                let s = self.push(State::AssertStart(HOLE));
                Frag { start: s, outs: vec![(s, 0)] }
            }
            Regex::AssertEnd => {
                let s = self.push(State::AssertEnd(HOLE));
                Frag { start: s, outs: vec![(s, 0)] }
            }
            Regex::Concat(items) => {
                let mut iter = items.iter();
                let Some(first) = iter.next() else {
                    return self.build(&Regex::Empty);
                };
                let mut frag = self.build(first);
                for item in iter {
                    let next = self.build(item);
                    self.patch(&frag.outs, next.start);
                    frag.outs = next.outs;
                }
                frag
            }
            Regex::Alt(items) => {
                let mut iter = items.iter().rev();
                let Some(last) = iter.next() else {
                    return self.build(&Regex::Empty);
                };
                let mut frag = self.build(last);
                for item in iter {
                    let f = self.build(item);
                    let split = self.push(State::Split(f.start, frag.start));
                    let mut outs = f.outs;
                    outs.extend(frag.outs);
                    frag = Frag { start: split, outs };
                }
                frag
            }
            Regex::Star(inner) => {
                let split = self.push(State::Split(HOLE, HOLE));
                let body = self.build(inner);
                if let State::Split(a, _) = &mut self.states[split] {
                    *a = body.start;
                }
                self.patch(&body.outs, split);
                Frag { start: split, outs: vec![(split, 1)] }
            }
        }
    }
}
