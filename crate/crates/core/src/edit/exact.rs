use super::{OpcodeTag, ScriptBuilder};

const MATCH: u8 = 0;
const REPLACE: u8 = 1;
const DELETE: u8 = 2;
const INSERT: u8 = 3;

/// Full Levenshtein table with a stored backtrack move per cell.
///
/// A move replaces the current best only on strict improvement, tried in the
/// order match/replace, delete, insert. Backtracking from `(m, n)` therefore
/// always resolves ties the same way.
pub(super) fn align(a: &[char], b: &[char], out: &mut ScriptBuilder<'_>) {
    let (m, n) = (a.len(), b.len());
    let width = n + 1;
    let mut moves = vec![0u8; (m + 1) * width];
    let mut prev: Vec<u32> = (0..=n as u32).collect();
    let mut cur = vec![0u32; width];
    moves[1..width].fill(INSERT);
    for i in 1..=m {
        cur[0] = i as u32;
        moves[i * width] = DELETE;
        let ai = a[i - 1];
        for j in 1..=n {
            let diag = prev[j - 1];
            let (mut best, mut mv) = if ai == b[j - 1] {
                (diag, MATCH)
            } else {
                (diag + 1, REPLACE)
            };
            if prev[j] + 1 < best {
                best = prev[j] + 1;
                mv = DELETE;
            }
            if cur[j - 1] + 1 < best {
                best = cur[j - 1] + 1;
                mv = INSERT;
            }
            cur[j] = best;
            moves[i * width + j] = mv;
        }
        std::mem::swap(&mut prev, &mut cur);
    }

    let mut path = Vec::with_capacity(m + n);
    let (mut i, mut j) = (m, n);
    while i > 0 || j > 0 {
        let mv = moves[i * width + j];
        path.push(mv);
        match mv {
            MATCH | REPLACE => {
                i -= 1;
                j -= 1;
            }
            DELETE => i -= 1,
            _ => j -= 1,
        }
    }
    for mv in path.into_iter().rev() {
        match mv {
            MATCH => out.push(OpcodeTag::Equal, 1, 1),
            REPLACE => out.push(OpcodeTag::Replace, 1, 1),
            DELETE => out.push(OpcodeTag::Delete, 1, 0),
            _ => out.push(OpcodeTag::Insert, 0, 1),
        }
    }
}
