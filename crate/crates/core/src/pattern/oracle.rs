use std::collections::HashMap;

use super::bitmap::{BehaviourBitmap, CaseTrace};
use super::{class_of, CompileError};
use crate::parser::Pattern;

/// Reference matcher. Decides, for every window `i..j` of the trace, whether
/// the pattern derives exactly that window, following the operator
/// definitions on the syntax tree: `->` joins adjacent windows, `~>` allows
/// an arbitrary gap, `*` is zero or more adjacent repetitions and anchors pin
/// the window to the trace boundaries. Exponential without the memo table;
/// meant for short traces.
pub fn brute_force_match(
    pattern: &Pattern,
    behaviours: &[String],
    trace: CaseTrace,
    bitmaps: &BehaviourBitmap,
) -> Result<bool, CompileError> {
    let mut o = Oracle { names: behaviours, trace, bitmaps, memo: HashMap::new() };
    for i in 0..=trace.len {
        for j in i..=trace.len {
            if o.derives(pattern, i, j)? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

struct Oracle<'a> {
    names: &'a [String],
    trace: CaseTrace,
    bitmaps: &'a BehaviourBitmap,
    memo: HashMap<(*const Pattern, usize, usize), bool>,
}

impl Oracle<'_> {
    fn derives(&mut self, p: &Pattern, i: usize, j: usize) -> Result<bool, CompileError> {
        let key = (p as *const Pattern, i, j);
        if let Some(&hit) = self.memo.get(&key) {
            return Ok(hit);
        }
        let n = self.trace.len;
        let result = match p {
            Pattern::Behaviour { .. } | Pattern::Literal { .. } | Pattern::Any | Pattern::Not(_) => {
                j == i + 1 && class_of(p, self.names)?.contains(self.trace.start + i, self.bitmaps)
            }
            Pattern::Concat(a, b) | Pattern::DirectlyFollows(a, b) => {
                let mut found = false;
                for k in i..=j {
                    if self.derives(a, i, k)? && self.derives(b, k, j)? {
                        found = true;
                        break;
                    }
                }
                found
            }
            Pattern::EventuallyFollows(a, b) => {
                let mut found = false;
                'outer: for k in i..=j {
                    if !self.derives(a, i, k)? {
                        continue;
                    }
                    for m in k..=j {
                        if self.derives(b, m, j)? {
                            found = true;
                            break 'outer;
                        }
                    }
                }
                found
            }
            Pattern::Alternation(items) => {
                let mut found = false;
                for item in items {
                    if self.derives(item, i, j)? {
                        found = true;
                        break;
                    }
                }
                found
            }
            Pattern::Repeat(inner) => {
                let mut found = i == j;
                for k in i + 1..=j {
                    if found {
                        break;
                    }
                    found = self.derives(inner, i, k)? && self.derives(p, k, j)?;
                }
                found
            }
            Pattern::Anchored { start, end, inner, .. } => {
                (!start || i == 0) && (!end || j == n) && self.derives(inner, i, j)?
            }
        };
        self.memo.insert(key, result);
        Ok(result)
    }
}
