//! Non-crossing set combinatorics: pairings, partitions, Kreweras
//! complements, and Möbius coefficients on the non-crossing lattice.
//!
//! Positions are `0..n`.  A pairing is a list of `(opener, closer)` pairs
//! with `opener < closer`; a partition is a list of blocks, each sorted
//! ascending, with blocks ordered by their least element.

/// Catalan number `C_n = binom(2n, n)/(n+1)`, exact for the sizes used here.
pub fn catalan(n: usize) -> u64 {
    let mut c: u128 = 1;
    for i in 0..n as u128 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c as u64
}

/// All non-crossing perfect pairings of `0..n` (empty when `n` is odd).
/// Pairs are `(opener, closer)` sorted by opener.
pub fn nc_pairings(n: usize) -> Vec<Vec<(usize, usize)>> {
    let positions: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    let mut current = Vec::new();
    pairings_rec(&positions, &mut current, &mut out);
    for p in &mut out {
        p.sort_unstable();
    }
    out
}

fn pairings_rec(
    positions: &[usize],
    current: &mut Vec<(usize, usize)>,
    out: &mut Vec<Vec<(usize, usize)>>,
) {
    if positions.is_empty() {
        out.push(current.clone());
        return;
    }
    if positions.len() % 2 != 0 {
        return;
    }
    // The first position pairs with some partner at odd distance; the
    // enclosed and remaining stretches pair up independently, which is
    // exactly the non-crossing condition.
    let first = positions[0];
    for j in (1..positions.len()).step_by(2) {
        current.push((first, positions[j]));
        let inside: Vec<usize> = positions[1..j].to_vec();
        let outside: Vec<usize> = positions[j + 1..].to_vec();
        let mut inner_results = Vec::new();
        pairings_rec(&inside, &mut Vec::new(), &mut inner_results);
        for inner in &inner_results {
            let mut cur2 = current.clone();
            cur2.extend_from_slice(inner);
            pairings_rec(&outside, &mut cur2, out);
        }
        current.pop();
    }
}

/// Whether two pairs `(a,b)`, `(c,d)` (openers first) cross:
/// `a < c < b < d` or `c < a < d < b`.
pub fn pairs_cross(p: (usize, usize), q: (usize, usize)) -> bool {
    let (a, b) = p;
    let (c, d) = q;
    (a < c && c < b && b < d) || (c < a && a < d && d < b)
}

/// All non-crossing partitions of `0..n`, blocks sorted ascending, blocks
/// ordered by least element.  `|NC(n)|` is the `n`-th Catalan number.
pub fn nc_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let positions: Vec<usize> = (0..n).collect();
    partitions_rec(&positions)
}

fn partitions_rec(positions: &[usize]) -> Vec<Vec<Vec<usize>>> {
    if positions.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    // The block of the least element is {positions[i_0 = 0], positions[i_1],
    // ...}; non-crossing forces every other block to live inside one of the
    // index gaps (i_k, i_{k+1}) or after the last chosen index.
    let m = positions.len();
    // Enumerate index subsets containing 0 via gap recursion.
    let mut chosen = vec![0usize];
    subsets_with_zero(m, 1, &mut chosen, &mut |chosen: &[usize]| {
        let block: Vec<usize> = chosen.iter().map(|&i| positions[i]).collect();
        // Gaps between consecutive chosen indices, plus the tail.
        let mut gap_partitions: Vec<Vec<Vec<Vec<usize>>>> = Vec::new();
        for w in 0..chosen.len() {
            let lo = chosen[w] + 1;
            let hi = if w + 1 < chosen.len() { chosen[w + 1] } else { m };
            gap_partitions.push(partitions_rec(&positions[lo..hi]));
        }
        // Cartesian product over the gaps.
        let mut combos: Vec<Vec<Vec<usize>>> = vec![vec![block.clone()]];
        for gp in gap_partitions {
            let mut next = Vec::with_capacity(combos.len() * gp.len());
            for c in &combos {
                for g in &gp {
                    let mut merged = c.clone();
                    merged.extend(g.iter().cloned());
                    next.push(merged);
                }
            }
            combos = next;
        }
        out.extend(combos);
    });
    for p in &mut out {
        p.sort_by_key(|b| b[0]);
    }
    out
}

/// Enumerate all increasing index sequences starting with the already-chosen
/// prefix (which begins with 0), calling `f` for each.
fn subsets_with_zero(m: usize, from: usize, chosen: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    f(chosen);
    for i in from..m {
        chosen.push(i);
        subsets_with_zero(m, i + 1, chosen, f);
        chosen.pop();
    }
}

/// Map each position to the index of its block.
pub fn block_of(partition: &[Vec<usize>], n: usize) -> Vec<usize> {
    let mut owner = vec![usize::MAX; n];
    for (b, block) in partition.iter().enumerate() {
        for &x in block {
            owner[x] = b;
        }
    }
    debug_assert!(owner.iter().all(|&b| b != usize::MAX));
    owner
}

/// Kreweras complement of a non-crossing partition of `0..n`: the cycles of
/// `σ_π^{-1} ∘ γ`, where `σ_π` has each block as an increasing cycle and `γ`
/// is the full cycle `i ↦ i+1 (mod n)`.
pub fn kreweras(partition: &[Vec<usize>], n: usize) -> Vec<Vec<usize>> {
    // σ as a permutation array.
    let mut sigma = vec![0usize; n];
    for block in partition {
        for (i, &x) in block.iter().enumerate() {
            sigma[x] = block[(i + 1) % block.len()];
        }
    }
    let mut sigma_inv = vec![0usize; n];
    for i in 0..n {
        sigma_inv[sigma[i]] = i;
    }
    // ρ = σ^{-1} ∘ γ.
    let rho: Vec<usize> = (0..n).map(|i| sigma_inv[(i + 1) % n]).collect();
    // Cycle decomposition.
    let mut seen = vec![false; n];
    let mut cycles = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            cycle.push(x);
            x = rho[x];
        }
        cycle.sort_unstable();
        cycles.push(cycle);
    }
    cycles.sort_by_key(|c| c[0]);
    cycles
}

/// Möbius coefficient `μ(π, 1_n)` on the non-crossing lattice:
/// the product over Kreweras-complement blocks `W` of
/// `(-1)^{|W|-1} · C_{|W|-1}`.
pub fn moebius_to_one(partition: &[Vec<usize>], n: usize) -> i64 {
    kreweras(partition, n)
        .iter()
        .map(|w| {
            let k = w.len() - 1;
            let c = catalan(k) as i64;
            if k % 2 == 0 {
                c
            } else {
                -c
            }
        })
        .product()
}
