//! Plain enumerators over small finite sets. Every list comes out in
//! lexicographic order.

/// All surjections `{0..n-1} -> {0..k-1}` as label tables.
pub fn surjections(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let mut table = vec![0; n];
    let mut counts = vec![0usize; k];
    fn rec(i: usize, table: &mut Vec<usize>, counts: &mut Vec<usize>, missing: usize, out: &mut Vec<Vec<usize>>) {
        let n = table.len();
        if n - i < missing {
            return;
        }
        if i == n {
            out.push(table.clone());
            return;
        }
        for v in 0..counts.len() {
            let new = counts[v] == 0;
            counts[v] += 1;
            table[i] = v;
            rec(i + 1, table, counts, missing - usize::from(new), out);
            counts[v] -= 1;
        }
    }
    rec(0, &mut table, &mut counts, k, &mut out);
    out
}

/// All injective tuples of length `m` over `{0..n-1}`.
pub fn injections(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if m > n {
        return out;
    }
    let mut tuple = Vec::with_capacity(m);
    let mut used = vec![false; n];
    fn rec(m: usize, tuple: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if tuple.len() == m {
            out.push(tuple.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                tuple.push(v);
                rec(m, tuple, used, out);
                tuple.pop();
                used[v] = false;
            }
        }
    }
    rec(m, &mut tuple, &mut used, &mut out);
    out
}

/// All permutations of `{0..n-1}` as image tables.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    injections(n, n)
}

/// Set partitions of `{0..n-1}` as restricted growth strings: block labels
/// appear in order of first use.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut table = vec![0; n];
    fn rec(i: usize, blocks: usize, table: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == table.len() {
            out.push(table.clone());
            return;
        }
        for v in 0..=blocks {
            table[i] = v;
            rec(i + 1, blocks.max(v + 1), table, out);
        }
    }
    rec(1, 1, &mut table, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(surjections(3, 2).len(), 6);
        assert_eq!(surjections(4, 2).len(), 14);
        assert_eq!(surjections(5, 3).len(), 150);
        assert_eq!(surjections(2, 3).len(), 0);
        assert_eq!(injections(4, 2).len(), 12);
        assert_eq!(permutations(4).len(), 24);
        // Bell numbers
        let bell: Vec<usize> = (1..=6).map(|n| set_partitions(n).len()).collect();
        assert_eq!(bell, vec![1, 2, 5, 15, 52, 203]);
    }

    #[test]
    fn lexicographic() {
        let s = surjections(3, 2);
        let mut sorted = s.clone();
        sorted.sort();
        assert_eq!(s, sorted);
        assert_eq!(s[0], vec![0, 0, 1]);
        let p = permutations(3);
        assert_eq!(p[0], vec![0, 1, 2]);
        assert_eq!(p[5], vec![2, 1, 0]);
    }
}
