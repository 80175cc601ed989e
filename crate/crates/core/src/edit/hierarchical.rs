//! Line-first alignment for inputs too large for a single DP table.
//!
//! Lines (with their terminating newline) are matched patience-style on
//! lines unique to both sides, falling back to a line LCS for small
//! unanchored regions. Each unmatched region is then aligned per character
//! after trimming its common prefix and suffix. The character DP minimises
//! edit cost first and the number of edit runs second, which keeps removed
//! blocks contiguous instead of scattering matches through them.

use std::collections::HashMap;
use std::ops::Range;

use super::{OpcodeTag, ScriptBuilder, EXACT_CELL_LIMIT};

const LINE_LCS_LIMIT: usize = 1 << 20;

pub(super) fn align(a: &[char], b: &[char], out: &mut ScriptBuilder<'_>) {
    let la = line_units(a);
    let lb = line_units(b);
    let mut intern: HashMap<&[char], u32> = HashMap::new();
    let ia = intern_lines(&mut intern, &la, a);
    let ib = intern_lines(&mut intern, &lb, b);

    let start_of = |units: &[Range<usize>], idx: usize, total: usize| {
        units.get(idx).map_or(total, |r| r.start)
    };

    let embed = Embedding::new(a, b);
    let admissible = |i: usize, j: usize| embed.admits(la[i].clone(), lb[j].clone());
    let (mut pa, mut pb) = (0usize, 0usize);
    let pairs = match_lines(&ia, &ib, &admissible);
    for &(i, j) in pairs.iter().chain(std::iter::once(&(la.len(), lb.len()))) {
        let ar = start_of(&la, pa, a.len())..start_of(&la, i, a.len());
        let br = start_of(&lb, pb, b.len())..start_of(&lb, j, b.len());
        align_region(&a[ar], &b[br], out);
        if i < la.len() {
            let len = la[i].len();
            out.push(OpcodeTag::Equal, len, len);
        }
        pa = i + 1;
        pb = j + 1;
    }
}

fn intern_lines<'t>(
    intern: &mut HashMap<&'t [char], u32>,
    units: &[Range<usize>],
    text: &'t [char],
) -> Vec<u32> {
    units
        .iter()
        .map(|r| {
            let next = intern.len() as u32;
            *intern.entry(&text[r.clone()]).or_insert(next)
        })
        .collect()
}

/// Greedy embeddings of `b` into `a`, present only when `b` is a
/// subsequence of `a`. A line pair is then admissible only if everything
/// before it and after it can still be aligned by pure deletion.
struct Embedding {
    /// `fwd[k]`: smallest `p` with `b[..k]` a subsequence of `a[..p]`.
    fwd: Vec<usize>,
    /// `bwd[k]`: largest `p` with `b[k..]` a subsequence of `a[p..]`.
    bwd: Vec<usize>,
}

impl Embedding {
    fn new(a: &[char], b: &[char]) -> Option<Self> {
        let mut fwd = Vec::with_capacity(b.len() + 1);
        fwd.push(0);
        let mut p = 0;
        for &c in b {
            p += a[p..].iter().position(|&x| x == c)? + 1;
            fwd.push(p);
        }
        let mut bwd = vec![a.len(); b.len() + 1];
        let mut p = a.len();
        for (k, &c) in b.iter().enumerate().rev() {
            p = a[..p].iter().rposition(|&x| x == c)?;
            bwd[k] = p;
        }
        Some(Self { fwd, bwd })
    }
}

trait Admits {
    fn admits(&self, a_line: Range<usize>, b_line: Range<usize>) -> bool;
}

impl Admits for Option<Embedding> {
    fn admits(&self, a_line: Range<usize>, b_line: Range<usize>) -> bool {
        match self {
            None => true,
            Some(e) => e.fwd[b_line.start] <= a_line.start && a_line.end <= e.bwd[b_line.end],
        }
    }
}

fn line_units(text: &[char]) -> Vec<Range<usize>> {
    let mut units = Vec::new();
    let mut start = 0;
    for (idx, &c) in text.iter().enumerate() {
        if c == '\n' {
            units.push(start..idx + 1);
            start = idx + 1;
        }
    }
    if start < text.len() {
        units.push(start..text.len());
    }
    units
}

/// Monotone list of matched `(a_line, b_line)` pairs.
fn match_lines(
    a: &[u32],
    b: &[u32],
    admissible: &dyn Fn(usize, usize) -> bool,
) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut work = vec![(0, a.len(), 0, b.len())];
    while let Some((mut alo, mut ahi, mut blo, mut bhi)) = work.pop() {
        while alo < ahi && blo < bhi && a[alo] == b[blo] && admissible(alo, blo) {
            pairs.push((alo, blo));
            alo += 1;
            blo += 1;
        }
        while alo < ahi && blo < bhi && a[ahi - 1] == b[bhi - 1] && admissible(ahi - 1, bhi - 1) {
            ahi -= 1;
            bhi -= 1;
            pairs.push((ahi, bhi));
        }
        if alo == ahi || blo == bhi {
            continue;
        }
        let anchors = unique_anchors(&a[alo..ahi], &b[blo..bhi], &|x, y| {
            admissible(x + alo, y + blo)
        });
        if !anchors.is_empty() {
            let (mut pa, mut pb) = (alo, blo);
            for (x, y) in anchors {
                let (x, y) = (x + alo, y + blo);
                work.push((pa, x, pb, y));
                pairs.push((x, y));
                pa = x + 1;
                pb = y + 1;
            }
            work.push((pa, ahi, pb, bhi));
        } else if (ahi - alo) * (bhi - blo) <= LINE_LCS_LIMIT {
            for (x, y) in line_lcs(&a[alo..ahi], &b[blo..bhi], &|x, y| {
                admissible(x + alo, y + blo)
            }) {
                pairs.push((x + alo, y + blo));
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Lines occurring exactly once on each side, reduced to their longest
/// increasing run so the anchors never cross.
fn unique_anchors(
    a: &[u32],
    b: &[u32],
    admissible: &dyn Fn(usize, usize) -> bool,
) -> Vec<(usize, usize)> {
    #[derive(Default)]
    struct Seen {
        in_a: u32,
        pos_a: usize,
        in_b: u32,
        pos_b: usize,
    }
    let mut seen: HashMap<u32, Seen> = HashMap::new();
    for (i, &id) in a.iter().enumerate() {
        let e = seen.entry(id).or_default();
        e.in_a += 1;
        e.pos_a = i;
    }
    for (j, &id) in b.iter().enumerate() {
        if let Some(e) = seen.get_mut(&id) {
            e.in_b += 1;
            e.pos_b = j;
        }
    }
    let mut cands: Vec<(usize, usize)> = seen
        .values()
        .filter(|e| e.in_a == 1 && e.in_b == 1)
        .map(|e| (e.pos_a, e.pos_b))
        .filter(|&(x, y)| admissible(x, y))
        .collect();
    cands.sort_unstable();
    longest_increasing_by_b(&cands)
}

fn longest_increasing_by_b(cands: &[(usize, usize)]) -> Vec<(usize, usize)> {
    // tails[k] = index into cands of the smallest tail of an increasing run of length k+1
    let mut tails: Vec<usize> = Vec::new();
    let mut back: Vec<Option<usize>> = vec![None; cands.len()];
    for (idx, &(_, y)) in cands.iter().enumerate() {
        let pos = tails.partition_point(|&t| cands[t].1 < y);
        if pos > 0 {
            back[idx] = Some(tails[pos - 1]);
        }
        if pos == tails.len() {
            tails.push(idx);
        } else {
            tails[pos] = idx;
        }
    }
    let mut run = Vec::with_capacity(tails.len());
    let mut cur = tails.last().copied();
    while let Some(idx) = cur {
        run.push(cands[idx]);
        cur = back[idx];
    }
    run.reverse();
    run
}

fn line_lcs(
    a: &[u32],
    b: &[u32],
    admissible: &dyn Fn(usize, usize) -> bool,
) -> Vec<(usize, usize)> {
    let (m, n) = (a.len(), b.len());
    let w = n + 1;
    let mut len = vec![0u32; (m + 1) * w];
    for i in (0..m).rev() {
        for j in (0..n).rev() {
            len[i * w + j] = if a[i] == b[j] && admissible(i, j) {
                len[(i + 1) * w + j + 1] + 1
            } else {
                len[(i + 1) * w + j].max(len[i * w + j + 1])
            };
        }
    }
    let mut pairs = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < m && j < n {
        if a[i] == b[j] && admissible(i, j) {
            pairs.push((i, j));
            i += 1;
            j += 1;
        } else if len[(i + 1) * w + j] >= len[i * w + j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    pairs
}

fn align_region(a: &[char], b: &[char], out: &mut ScriptBuilder<'_>) {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[prefix..], &b[prefix..]);
    let suffix = a
        .iter()
        .rev()
        .zip(b.iter().rev())
        .take_while(|(x, y)| x == y)
        .count();
    let (a, b) = (&a[..a.len() - suffix], &b[..b.len() - suffix]);

    out.push(OpcodeTag::Equal, prefix, prefix);
    if a.is_empty() || b.is_empty() {
        out.push(OpcodeTag::Delete, a.len(), 0);
        out.push(OpcodeTag::Insert, 0, b.len());
    } else if a.len().saturating_mul(b.len()) <= EXACT_CELL_LIMIT {
        contiguous_dp(a, b, out);
    } else {
        out.push(OpcodeTag::Replace, a.len(), b.len());
    }
    out.push(OpcodeTag::Equal, suffix, suffix);
}

const EQ: usize = 0;
const REP: usize = 1;
const DEL: usize = 2;
const INS: usize = 3;
const INF: u64 = u64::MAX;

/// Score packs (edit cost, number of edit runs) so plain `u64` comparison is
/// lexicographic.
#[inline]
fn step(from: u64, to_state: usize, from_state: usize) -> u64 {
    if from == INF {
        return INF;
    }
    let cost = u64::from(to_state != EQ) << 32;
    let open = u64::from(to_state != EQ && to_state != from_state);
    from + cost + open
}

fn contiguous_dp(a: &[char], b: &[char], out: &mut ScriptBuilder<'_>) {
    let (m, n) = (a.len(), b.len());
    let w = n + 1;
    // back[(i * w + j) * 4 + state] = predecessor state
    let mut back = vec![0u8; (m + 1) * w * 4];
    let mut prev = vec![[INF; 4]; w];
    let mut cur = vec![[INF; 4]; w];

    prev[0][EQ] = 0;
    for j in 1..=n {
        let from = if j == 1 { EQ } else { INS };
        prev[j][INS] = step(prev[j - 1][from], INS, from);
        back[j * 4 + INS] = from as u8;
    }
    for i in 1..=m {
        cur.fill([INF; 4]);
        let from = if i == 1 { EQ } else { DEL };
        cur[0][DEL] = step(prev[0][from], DEL, from);
        back[i * w * 4 + DEL] = from as u8;
        for j in 1..=n {
            let cell = (i * w + j) * 4;
            let diag_state = if a[i - 1] == b[j - 1] { EQ } else { REP };
            let (s, p) = best_from(&prev[j - 1], diag_state);
            cur[j][diag_state] = s;
            back[cell + diag_state] = p;
            let (s, p) = best_from(&prev[j], DEL);
            cur[j][DEL] = s;
            back[cell + DEL] = p;
            let (s, p) = best_from(&cur[j - 1], INS);
            cur[j][INS] = s;
            back[cell + INS] = p;
        }
        std::mem::swap(&mut prev, &mut cur);
    }

    let mut state = (0..4).min_by_key(|&s| prev[n][s]).unwrap_or(EQ);
    let mut path = Vec::with_capacity(m + n);
    let (mut i, mut j) = (m, n);
    while i > 0 || j > 0 {
        path.push(state);
        let p = back[(i * w + j) * 4 + state] as usize;
        match state {
            EQ | REP => {
                i -= 1;
                j -= 1;
            }
            DEL => i -= 1,
            _ => j -= 1,
        }
        state = p;
    }
    for s in path.into_iter().rev() {
        match s {
            EQ => out.push(OpcodeTag::Equal, 1, 1),
            REP => out.push(OpcodeTag::Replace, 1, 1),
            DEL => out.push(OpcodeTag::Delete, 1, 0),
            _ => out.push(OpcodeTag::Insert, 0, 1),
        }
    }
}

#[inline]
fn best_from(scores: &[u64; 4], to: usize) -> (u64, u8) {
    let mut best = (INF, EQ as u8);
    for (from, &score) in scores.iter().enumerate() {
        let s = step(score, to, from);
        if s < best.0 {
            best = (s, from as u8);
        }
    }
    best
}
