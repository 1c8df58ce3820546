use crate::nested::degree_at;
use crate::predecessor::predecessor_in;
use crate::Key;

const NONE: u32 = u32::MAX;

/// Most children a node of `height` may have; height 1 nodes hold buckets.
pub(crate) fn max_degree(height: u32) -> usize {
    degree_at(height + 1).min(1 << 32) as usize
}

pub(crate) fn min_degree(height: u32) -> usize {
    (max_degree(height) / 4).max(1)
}

#[derive(Debug, Clone)]
struct Node {
    height: u32,
    /// `keys[i]` is the smallest separator under `children[i]`.
    keys: Vec<Key>,
    /// Bucket ids at height 1, node ids above.
    children: Vec<u32>,
    parent: u32,
    prev: u32,
    next: u32,
}

/// Level-linked search tree over bucket separators. A bucket's separator is
/// at most its smallest key and larger than every key of the bucket before
/// it, so the bucket holding `k` is the one with the largest separator `<= k`.
/// Routing keys are subtree minima, and every node links to its neighbours
/// on the same level.
#[derive(Debug, Clone)]
pub(crate) struct TopTree {
    nodes: Vec<Node>,
    free: Vec<u32>,
    root: u32,
    /// Height 1 node holding each bucket id.
    parent_of: Vec<u32>,
    work: u64,
}

impl TopTree {
    pub fn new(bucket: u32, sep: Key) -> Self {
        let mut t = TopTree {
            nodes: Vec::new(),
            free: Vec::new(),
            root: 0,
            parent_of: Vec::new(),
            work: 0,
        };
        t.root = t.alloc(Node {
            height: 1,
            keys: vec![sep],
            children: vec![bucket],
            parent: NONE,
            prev: NONE,
            next: NONE,
        });
        t.set_parent_of(bucket, t.root);
        t
    }

    pub fn work(&self) -> u64 {
        self.work
    }

    pub fn height(&self) -> u32 {
        self.nodes[self.root as usize].height
    }

    /// Cells held by node arrays.
    pub fn allocated_cells(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| n.keys.capacity() + n.children.capacity() + 4)
            .sum::<usize>()
            + self.parent_of.capacity()
    }

    fn alloc(&mut self, node: Node) -> u32 {
        match self.free.pop() {
            Some(id) => {
                self.nodes[id as usize] = node;
                id
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        }
    }

    fn release(&mut self, id: u32) {
        let n = &mut self.nodes[id as usize];
        n.keys = Vec::new();
        n.children = Vec::new();
        self.free.push(id);
    }

    fn set_parent_of(&mut self, bucket: u32, node: u32) {
        let b = bucket as usize;
        if b >= self.parent_of.len() {
            self.parent_of.resize(b + 1, NONE);
        }
        self.parent_of[b] = node;
    }

    fn set_child_parent(&mut self, height: u32, child: u32, parent: u32) {
        if height == 1 {
            self.set_parent_of(child, parent);
        } else {
            self.nodes[child as usize].parent = parent;
        }
    }

    fn index_in(&self, node: u32, child: u32) -> usize {
        self.nodes[node as usize]
            .children
            .iter()
            .position(|&c| c == child)
            .expect("child listed in its parent")
    }

    /// Rewrites the routing key of `child` at `node` and up through every
    /// ancestor of which it is the leftmost descendant.
    fn update_key(&mut self, mut node: u32, mut idx: usize, key: Key) {
        loop {
            self.work += 1;
            let n = &mut self.nodes[node as usize];
            n.keys[idx] = key;
            if idx != 0 || n.parent == NONE {
                return;
            }
            let parent = n.parent;
            idx = self.index_in(parent, node);
            node = parent;
        }
    }

    pub fn set_sep(&mut self, bucket: u32, sep: Key) {
        let p = self.parent_of[bucket as usize];
        let i = self.index_in(p, bucket);
        self.update_key(p, i, sep);
    }

    /// Inserts `bucket` with separator `sep` right after `after`.
    pub fn insert_after(&mut self, after: u32, bucket: u32, sep: Key) {
        let p = self.parent_of[after as usize];
        let i = self.index_in(p, after);
        let n = &mut self.nodes[p as usize];
        n.keys.insert(i + 1, sep);
        n.children.insert(i + 1, bucket);
        self.work += (n.children.len() - i) as u64;
        self.set_parent_of(bucket, p);
        self.fix_overflow(p);
    }

    fn fix_overflow(&mut self, mut node: u32) {
        loop {
            let n = &self.nodes[node as usize];
            let height = n.height;
            if n.children.len() <= max_degree(height) {
                return;
            }
            let half = n.children.len() / 2;
            let n = &mut self.nodes[node as usize];
            let keys = n.keys.split_off(half);
            let children = n.children.split_off(half);
            let (parent, next) = (n.parent, n.next);
            self.work += children.len() as u64 + 1;
            let right_key = keys[0];
            let right = self.alloc(Node {
                height,
                keys,
                children: children.clone(),
                parent,
                prev: node,
                next,
            });
            for c in children {
                self.set_child_parent(height, c, right);
            }
            self.nodes[node as usize].next = right;
            if next != NONE {
                self.nodes[next as usize].prev = right;
            }
            if parent == NONE {
                let left_key = self.nodes[node as usize].keys[0];
                let root = self.alloc(Node {
                    height: height + 1,
                    keys: vec![left_key, right_key],
                    children: vec![node, right],
                    parent: NONE,
                    prev: NONE,
                    next: NONE,
                });
                self.nodes[node as usize].parent = root;
                self.nodes[right as usize].parent = root;
                self.root = root;
                return;
            }
            let i = self.index_in(parent, node);
            let pn = &mut self.nodes[parent as usize];
            pn.keys.insert(i + 1, right_key);
            pn.children.insert(i + 1, right);
            self.work += (pn.children.len() - i) as u64;
            node = parent;
        }
    }

    /// Removes `bucket` from the tree. The tree must keep at least one bucket.
    pub fn remove(&mut self, bucket: u32) {
        let p = self.parent_of[bucket as usize];
        let i = self.index_in(p, bucket);
        self.parent_of[bucket as usize] = NONE;
        self.remove_child(p, i);
    }

    fn remove_child(&mut self, node: u32, idx: usize) {
        let n = &mut self.nodes[node as usize];
        n.keys.remove(idx);
        n.children.remove(idx);
        self.work += (n.children.len() - idx + 1) as u64;
        let len = n.children.len();
        let height = n.height;
        let parent = n.parent;
        if parent == NONE {
            assert!(len > 0, "top tree must keep one bucket");
            if len == 1 && height > 1 {
                let child = self.nodes[node as usize].children[0];
                self.nodes[child as usize].parent = NONE;
                self.release(node);
                self.root = child;
            }
            return;
        }
        if idx == 0 && len > 0 {
            let key = self.nodes[node as usize].keys[0];
            let pi = self.index_in(parent, node);
            self.update_key(parent, pi, key);
        }
        if len >= min_degree(height) && len > 0 {
            return;
        }
        self.fix_underflow(node);
    }

    fn unlink(&mut self, node: u32) {
        let (prev, next) = {
            let n = &self.nodes[node as usize];
            (n.prev, n.next)
        };
        if prev != NONE {
            self.nodes[prev as usize].next = next;
        }
        if next != NONE {
            self.nodes[next as usize].prev = prev;
        }
    }

    fn fix_underflow(&mut self, node: u32) {
        let parent = self.nodes[node as usize].parent;
        let height = self.nodes[node as usize].height;
        let pi = self.index_in(parent, node);
        if self.nodes[node as usize].children.is_empty() {
            self.unlink(node);
            self.release(node);
            self.remove_child(parent, pi);
            return;
        }
        let siblings = &self.nodes[parent as usize].children;
        let (left, right) = if pi + 1 < siblings.len() {
            (node, siblings[pi + 1])
        } else if pi > 0 {
            (siblings[pi - 1], node)
        } else {
            // Only child of a non-root parent; the parent handles it.
            return;
        };
        let li = self.index_in(parent, left);
        let sibling = if node == left { right } else { left };
        if self.nodes[sibling as usize].children.len() > min_degree(height) {
            // Borrow one child across the boundary.
            if node == left {
                let r = &mut self.nodes[right as usize];
                let k = r.keys.remove(0);
                let c = r.children.remove(0);
                let rk = r.keys[0];
                self.work += r.children.len() as u64 + 2;
                let l = &mut self.nodes[left as usize];
                l.keys.push(k);
                l.children.push(c);
                self.set_child_parent(height, c, left);
                self.update_key(parent, li + 1, rk);
            } else {
                let l = &mut self.nodes[left as usize];
                let k = l.keys.pop().expect("left sibling has children");
                let c = l.children.pop().expect("left sibling has children");
                let r = &mut self.nodes[right as usize];
                r.keys.insert(0, k);
                r.children.insert(0, c);
                self.work += r.children.len() as u64 + 2;
                self.set_child_parent(height, c, right);
                self.update_key(parent, li + 1, k);
            }
            return;
        }
        // Merge right into left.
        let r = &mut self.nodes[right as usize];
        let keys = std::mem::take(&mut r.keys);
        let children = std::mem::take(&mut r.children);
        self.work += children.len() as u64 + 1;
        for &c in &children {
            self.set_child_parent(height, c, left);
        }
        let l = &mut self.nodes[left as usize];
        l.keys.extend(keys);
        l.children.extend(children);
        self.unlink(right);
        self.release(right);
        self.remove_child(parent, li + 1);
    }

    /// Predecessor query down from `node`, which must span `key`.
    fn descend(&self, mut node: u32, key: Key, probes: &mut u64) -> u32 {
        loop {
            let n = &self.nodes[node as usize];
            let (hit, spent) = predecessor_in(&n.keys, key);
            *probes += spent;
            let child = n.children[hit.unwrap_or(0)];
            if n.height == 1 {
                return child;
            }
            node = child;
        }
    }

    /// Bucket whose range holds `key`, searched from the root.
    pub fn locate(&self, key: Key) -> (u32, u64) {
        let mut probes = 0;
        let b = self.descend(self.root, key, &mut probes);
        (b, probes)
    }

    /// Whether `key` falls in the key range of `node`, which runs from its
    /// first routing key to its right neighbour's.
    fn low(&self, node: u32) -> Key {
        self.nodes[node as usize].keys[0]
    }

    /// Bucket whose range holds `key`, searched from bucket `from` by walking
    /// up and checking one level neighbour per step.
    pub fn locate_from(&self, from: u32, key: Key) -> (u32, u64) {
        let mut probes = 0;
        let mut u = self.parent_of[from as usize];
        loop {
            let n = &self.nodes[u as usize];
            probes += 1;
            let right = key >= self.low(u);
            let (covers, nb) = if right {
                probes += 1;
                let covered = n.next == NONE || key < self.low(n.next);
                (covered, n.next)
            } else {
                (false, n.prev)
            };
            if covers || n.parent == NONE {
                return (self.descend(u, key, &mut probes), probes);
            }
            if nb != NONE {
                let m = &self.nodes[nb as usize];
                probes += 1;
                let in_nb = if right {
                    m.next == NONE || key < self.low(m.next)
                } else {
                    key >= self.low(nb)
                };
                if in_nb {
                    return (self.descend(nb, key, &mut probes), probes);
                }
            }
            u = n.parent;
        }
    }

    /// Checks links, routing keys and degree bounds against the bucket order
    /// `order` of `(bucket, separator)` pairs.
    pub fn validate(&self, order: &[(u32, Key)]) -> Result<(), String> {
        let mut level: Vec<u32> = vec![self.root];
        if self.nodes[self.root as usize].parent != NONE {
            return Err("root has a parent".into());
        }
        loop {
            let height = self.nodes[level[0] as usize].height;
            for (w, &id) in level.iter().enumerate() {
                let n = &self.nodes[id as usize];
                if n.height != height {
                    return Err(format!("node {id} at wrong height"));
                }
                let want_prev = if w == 0 { NONE } else { level[w - 1] };
                let want_next = level.get(w + 1).copied().unwrap_or(NONE);
                if n.prev != want_prev || n.next != want_next {
                    return Err(format!("level links of node {id}"));
                }
                if n.children.len() > max_degree(height)
                    || (id != self.root && n.children.len() < min_degree(height))
                    || n.children.is_empty()
                {
                    return Err(format!("degree {} of node {id}", n.children.len()));
                }
                if n.keys.windows(2).any(|k| k[0] >= k[1]) {
                    return Err(format!("routing keys of node {id}"));
                }
                if height > 1 {
                    for (i, &c) in n.children.iter().enumerate() {
                        let cn = &self.nodes[c as usize];
                        if cn.parent != id || cn.height + 1 != height || cn.keys[0] != n.keys[i] {
                            return Err(format!("child {c} of node {id}"));
                        }
                    }
                }
            }
            if height == 1 {
                break;
            }
            level = level
                .iter()
                .flat_map(|&id| self.nodes[id as usize].children.iter().copied())
                .collect();
        }
        let mut i = 0;
        for &id in &level {
            let n = &self.nodes[id as usize];
            for (k, &b) in n.keys.iter().zip(&n.children) {
                match order.get(i) {
                    Some(&(ob, sep)) if ob == b && sep == *k && self.parent_of[b as usize] == id => {}
                    _ => return Err(format!("bucket order at {i}")),
                }
                i += 1;
            }
        }
        if i != order.len() {
            return Err("bucket count".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scan(order: &[(u32, Key)], key: Key) -> u32 {
        order.iter().rev().find(|&&(_, s)| s <= key).unwrap().0
    }

    #[test]
    fn degrees_by_height() {
        assert_eq!((max_degree(1), min_degree(1)), (4, 1));
        assert_eq!((max_degree(2), min_degree(2)), (16, 4));
        assert_eq!((max_degree(3), min_degree(3)), (256, 64));
    }

    #[test]
    fn grows_and_shrinks_consistently() {
        let mut t = TopTree::new(0, 0);
        let mut order = vec![(0u32, 0u64)];
        for b in 1..3000u32 {
            let after = order.last().unwrap().0;
            t.insert_after(after, b, b as u64 * 10);
            order.push((b, b as u64 * 10));
        }
        t.validate(&order).unwrap();
        assert!(t.height() >= 3);
        for key in (0..30_010).step_by(7) {
            let want = scan(&order, key);
            assert_eq!(t.locate(key).0, want);
            for from in [0u32, 1, 17, 1500, 2999] {
                assert_eq!(t.locate_from(from, key).0, want, "from {from} key {key}");
            }
        }
        // Middle insertions, removals and separator moves.
        let mut next = 3000u32;
        for step in 0..4000usize {
            let pos = (step * 7919) % order.len();
            match step % 3 {
                0 if order.len() > 1 && pos > 0 => {
                    let (b, _) = order.remove(pos);
                    t.remove(b);
                }
                1 => {
                    let lo = order[pos].1;
                    let hi = order.get(pos + 1).map_or(lo + 1000, |x| x.1);
                    if hi - lo >= 2 {
                        let sep = lo + (hi - lo) / 2;
                        t.insert_after(order[pos].0, next, sep);
                        order.insert(pos + 1, (next, sep));
                        next += 1;
                    }
                }
                _ => {
                    if pos > 0 {
                        let lo = order[pos - 1].1;
                        let hi = order.get(pos + 1).map_or(order[pos].1 + 10, |x| x.1);
                        let sep = lo + 1 + (order[pos].1 - lo) / 2;
                        if sep < hi {
                            t.set_sep(order[pos].0, sep);
                            order[pos].1 = sep;
                        }
                    }
                }
            }
            if step % 97 == 0 {
                t.validate(&order).unwrap_or_else(|e| panic!("step {step}: {e}"));
            }
        }
        t.validate(&order).unwrap();
        for (i, &(from, _)) in order.iter().enumerate().step_by(11) {
            for key in (0..order.last().unwrap().1 + 20).step_by(53) {
                assert_eq!(t.locate_from(from, key).0, scan(&order, key), "i {i}");
            }
        }
        while order.len() > 1 {
            let (b, _) = order.pop().unwrap();
            t.remove(b);
        }
        t.validate(&order).unwrap();
        assert_eq!(t.height(), 1);
    }
}
