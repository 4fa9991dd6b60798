//! Line diff by longest common subsequence.

/// One aligned step between two line sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineOp {
    Equal,
    Delete,
    Insert,
}

/// Edit script turning `old` into `new`.
pub fn line_ops(old: &[&str], new: &[&str]) -> Vec<LineOp> {
    let prefix = old.iter().zip(new).take_while(|(a, b)| a == b).count();
    let max_suffix = old.len().min(new.len()) - prefix;
    let suffix = old
        .iter()
        .rev()
        .zip(new.iter().rev())
        .take(max_suffix)
        .take_while(|(a, b)| a == b)
        .count();
    let a = &old[prefix..old.len() - suffix];
    let b = &new[prefix..new.len() - suffix];

    // lcs[i][j] = LCS length of a[i..] and b[j..]
    let width = b.len() + 1;
    let mut lcs = vec![0u32; (a.len() + 1) * width];
    for i in (0..a.len()).rev() {
        for j in (0..b.len()).rev() {
            lcs[i * width + j] = if a[i] == b[j] {
                lcs[(i + 1) * width + j + 1] + 1
            } else {
                lcs[(i + 1) * width + j].max(lcs[i * width + j + 1])
            };
        }
    }

    let mut ops = vec![LineOp::Equal; prefix];
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if i < a.len() && j < b.len() && a[i] == b[j] {
            ops.push(LineOp::Equal);
            i += 1;
            j += 1;
        } else if j < b.len() && (i == a.len() || lcs[i * width + j + 1] >= lcs[(i + 1) * width + j]) {
            ops.push(LineOp::Insert);
            j += 1;
        } else {
            ops.push(LineOp::Delete);
            i += 1;
        }
    }
    ops.extend(std::iter::repeat(LineOp::Equal).take(suffix));
    ops
}

/// 1-based inclusive line ranges of `new` touched by the edit from `old`.
///
/// A hunk that inserts lines yields the inserted range. A pure deletion
/// yields the single line at the deletion point, clamped to the file length.
/// An empty `new` yields nothing.
pub fn changed_ranges(old: &str, new: &str) -> Vec<(usize, usize)> {
    let old_lines: Vec<&str> = old.lines().collect();
    let new_lines: Vec<&str> = new.lines().collect();
    if new_lines.is_empty() {
        return Vec::new();
    }
    let ops = line_ops(&old_lines, &new_lines);

    let mut ranges: Vec<(usize, usize)> = Vec::new();
    let mut new_pos = 0;
    let mut k = 0;
    while k < ops.len() {
        if ops[k] == LineOp::Equal {
            new_pos += 1;
            k += 1;
            continue;
        }
        let hunk_start = new_pos;
        while k < ops.len() && ops[k] != LineOp::Equal {
            if ops[k] == LineOp::Insert {
                new_pos += 1;
            }
            k += 1;
        }
        let range = if new_pos > hunk_start {
            (hunk_start + 1, new_pos)
        } else {
            let line = (hunk_start + 1).min(new_lines.len());
            (line, line)
        };
        ranges.push(range);
    }
    merge(ranges)
}

fn merge(mut ranges: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    ranges.sort_unstable();
    let mut out: Vec<(usize, usize)> = Vec::with_capacity(ranges.len());
    for (s, e) in ranges {
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}
