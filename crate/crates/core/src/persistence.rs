//! 0-dimensional persistent homology of the sublevel filtration of a
//! grayscale image.
//!
//! A pixel enters the filtration at its own intensity; an edge (or
//! triangle) enters at the largest intensity among its vertices. For
//! connected components that means sweeping pixels in ascending
//! `(intensity, row-major index)` order and merging with whatever
//! neighbors are already present is exact, so no complex is built.
//!
//! Merges follow the elder rule: the component with the smaller
//! `(birth, creation order)` survives. Because the sweep visits pixels in
//! that same order, the root of every union-find tree is the pixel that
//! created the component, and a component's birth is that pixel's value.

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::imagecore::GrayImage;

/// Pixel adjacency used to decide which pixels touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Connectivity {
    /// Edge-adjacent neighbors only.
    #[default]
    Four,
    /// Edge- and corner-adjacent neighbors.
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];
        const EIGHT: [(isize, isize); 8] = [
            (-1, -1),
            (-1, 0),
            (-1, 1),
            (0, -1),
            (0, 1),
            (1, -1),
            (1, 0),
            (1, 1),
        ];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }

    /// Calls `f` with the row-major index of every in-bounds neighbor.
    #[inline]
    pub fn for_each_neighbor(
        self,
        index: usize,
        width: usize,
        height: usize,
        mut f: impl FnMut(usize),
    ) {
        let (r, c) = ((index / width) as isize, (index % width) as isize);
        for &(dr, dc) in self.offsets() {
            let (nr, nc) = (r + dr, c + dc);
            if nr >= 0 && nc >= 0 && (nr as usize) < height && (nc as usize) < width {
                f(nr as usize * width + nc as usize);
            }
        }
    }

    pub fn neighbors_per_pixel(self) -> usize {
        self.offsets().len()
    }
}

impl std::str::FromStr for Connectivity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "4" | "four" => Ok(Connectivity::Four),
            "8" | "eight" => Ok(Connectivity::Eight),
            other => Err(format!("connectivity must be 4 or 8, got `{other}`")),
        }
    }
}

impl std::fmt::Display for Connectivity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Connectivity::Four => "4",
            Connectivity::Eight => "8",
        })
    }
}

/// Death level of a class. `Finite` sorts before `Infinite`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Death {
    Finite(u8),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PersistencePair {
    pub birth: u8,
    pub death: Death,
    /// Row-major index of the first pixel of the component.
    pub creator: usize,
}

impl PersistencePair {
    /// `death - birth`, or `None` for essential classes.
    pub fn lifetime(&self) -> Option<u32> {
        match self.death {
            Death::Finite(d) => Some((d - self.birth) as u32),
            Death::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PersistenceDiagram {
    pub finite_pairs: Vec<PersistencePair>,
    pub essential: Vec<PersistencePair>,
}

impl PersistenceDiagram {
    pub fn lifetimes(&self) -> Vec<u32> {
        self.finite_pairs
            .iter()
            .filter_map(|p| p.lifetime())
            .collect()
    }

    /// All `(birth, death)` points, sorted; suitable for multiset comparison.
    pub fn points(&self) -> Vec<(u8, Death)> {
        let mut pts: Vec<_> = self
            .finite_pairs
            .iter()
            .chain(&self.essential)
            .map(|p| (p.birth, p.death))
            .collect();
        pts.sort_unstable();
        pts
    }

    /// Pairs ordered by descending lifetime (essential first), then ascending birth.
    pub fn sorted_pairs(&self) -> Vec<PersistencePair> {
        let mut pairs: Vec<_> = self
            .essential
            .iter()
            .chain(&self.finite_pairs)
            .copied()
            .collect();
        pairs.sort_by(|a, b| match (a.lifetime(), b.lifetime()) {
            (None, None) => a.birth.cmp(&b.birth),
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (Some(x), Some(y)) => y.cmp(&x).then(a.birth.cmp(&b.birth)),
        });
        pairs
    }

    /// CSV with header `birth,death,lifetime`; essential classes print `inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("birth,death,lifetime\n");
        for p in self.sorted_pairs() {
            match p.death {
                Death::Finite(d) => writeln!(out, "{},{},{}", p.birth, d, d - p.birth),
                Death::Infinite => writeln!(out, "{},inf,inf", p.birth),
            }
            .expect("writing to a String cannot fail");
        }
        out
    }
}

/// One step of the filtration sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SweepEvent {
    /// `pixel` has no present neighbor and starts a new component.
    Born { pixel: usize },
    /// Component rooted at `dying` is absorbed by the elder `survivor` at `level`.
    Died {
        survivor: usize,
        dying: usize,
        level: u8,
    },
    /// `pixel` joins the component rooted at `root` (after any deaths it caused).
    Joined { pixel: usize, root: usize },
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    const ABSENT: u32 = u32::MAX;

    fn new(n: usize) -> Self {
        Self {
            parent: vec![Self::ABSENT; n],
        }
    }

    fn is_present(&self, i: usize) -> bool {
        self.parent[i] != Self::ABSENT
    }

    fn find(&mut self, mut i: usize) -> usize {
        // path halving
        while self.parent[i] as usize != i {
            let grand = self.parent[self.parent[i] as usize];
            self.parent[i] = grand;
            i = grand as usize;
        }
        i
    }
}

/// Pixel indices ordered by `(intensity, index)`; counting sort keeps row-major order per level.
fn sweep_order(img: &GrayImage) -> Vec<u32> {
    let mut starts = [0usize; 257];
    for &v in img.pixels() {
        starts[v as usize + 1] += 1;
    }
    for i in 1..257 {
        starts[i] += starts[i - 1];
    }
    let mut order = vec![0u32; img.len()];
    for (i, &v) in img.pixels().iter().enumerate() {
        order[starts[v as usize]] = i as u32;
        starts[v as usize] += 1;
    }
    order
}

/// Runs the elder-rule sweep, reporting each event. Returns the surviving roots.
pub(crate) fn sweep(
    img: &GrayImage,
    conn: Connectivity,
    mut on_event: impl FnMut(SweepEvent),
) -> Vec<usize> {
    let (w, h) = (img.width(), img.height());
    let values = img.pixels();
    let mut uf = UnionFind::new(img.len());
    let mut roots: Vec<usize> = Vec::with_capacity(8);

    for &p in &sweep_order(img) {
        let p = p as usize;
        let level = values[p];
        roots.clear();
        conn.for_each_neighbor(p, w, h, |n| {
            if uf.is_present(n) {
                let r = uf.find(n);
                if !roots.contains(&r) {
                    roots.push(r);
                }
            }
        });

        let Some(&elder) = roots.iter().min_by_key(|&&r| (values[r], r)) else {
            uf.parent[p] = p as u32;
            on_event(SweepEvent::Born { pixel: p });
            continue;
        };
        for &r in roots.iter().filter(|&&r| r != elder) {
            uf.parent[r] = elder as u32;
            on_event(SweepEvent::Died {
                survivor: elder,
                dying: r,
                level,
            });
        }
        uf.parent[p] = elder as u32;
        on_event(SweepEvent::Joined {
            pixel: p,
            root: elder,
        });
    }

    (0..img.len())
        .filter(|&i| uf.parent[i] as usize == i)
        .collect()
}

/// 0-dimensional persistence diagram of the sublevel filtration.
/// Zero-lifetime pairs are dropped.
pub fn compute_persistence(img: &GrayImage, conn: Connectivity) -> PersistenceDiagram {
    let values = img.pixels();
    let mut finite_pairs = Vec::new();
    let survivors = sweep(img, conn, |ev| {
        if let SweepEvent::Died { dying, level, .. } = ev {
            let birth = values[dying];
            if level > birth {
                finite_pairs.push(PersistencePair {
                    birth,
                    death: Death::Finite(level),
                    creator: dying,
                });
            }
        }
    });
    let essential = survivors
        .into_iter()
        .map(|r| PersistencePair {
            birth: values[r],
            death: Death::Infinite,
            creator: r,
        })
        .collect();
    PersistenceDiagram {
        finite_pairs,
        essential,
    }
}

/// Labels the connected components of the pixels selected by `is_fg`.
/// Returns per-pixel labels (`None` for background) and the component count.
/// Labels are assigned in row-major order of each component's first pixel.
pub fn label_components(
    width: usize,
    height: usize,
    conn: Connectivity,
    is_fg: impl Fn(usize) -> bool,
) -> (Vec<Option<u32>>, usize) {
    let mut labels = vec![None; width * height];
    let mut queue = VecDeque::new();
    let mut count = 0u32;
    for start in 0..width * height {
        if labels[start].is_some() || !is_fg(start) {
            continue;
        }
        labels[start] = Some(count);
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            conn.for_each_neighbor(i, width, height, |n| {
                if labels[n].is_none() && is_fg(n) {
                    labels[n] = Some(count);
                    queue.push_back(n);
                }
            });
        }
        count += 1;
    }
    (labels, count as usize)
}

/// Reference implementation straight from the filtration definition:
/// threshold at every level, flood-fill, and match components across
/// levels by containment. Quadratic-ish; meant for small test images.
pub fn brute_force_persistence(img: &GrayImage, conn: Connectivity) -> PersistenceDiagram {
    let (w, h) = (img.width(), img.height());
    let values = img.pixels();
    let mut levels: Vec<u8> = values.to_vec();
    levels.sort_unstable();
    levels.dedup();

    // identity of a class: (birth, smallest pixel index at birth)
    let mut identities: Vec<(u8, usize)> = Vec::new();
    // identity id per pixel at the previous level
    let mut prev: Vec<Option<usize>> = vec![None; w * h];
    let mut finite_pairs = Vec::new();

    for &t in &levels {
        let (labels, count) = label_components(w, h, conn, |i| values[i] <= t);
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
        for (i, l) in labels.iter().enumerate() {
            if let Some(l) = l {
                members[*l as usize].push(i);
            }
        }

        let mut next = vec![None; w * h];
        for pixels in &members {
            let mut contained: Vec<usize> = pixels.iter().filter_map(|&i| prev[i]).collect();
            contained.sort_unstable();
            contained.dedup();

            let id = if contained.is_empty() {
                identities.push((t, pixels[0]));
                identities.len() - 1
            } else {
                let elder = *contained
                    .iter()
                    .min_by_key(|&&id| identities[id])
                    .expect("nonempty");
                for &id in contained.iter().filter(|&&id| id != elder) {
                    let (birth, creator) = identities[id];
                    finite_pairs.push(PersistencePair {
                        birth,
                        death: Death::Finite(t),
                        creator,
                    });
                }
                elder
            };
            for &i in pixels {
                next[i] = Some(id);
            }
        }
        prev = next;
    }

    let mut alive: Vec<usize> = prev.iter().flatten().copied().collect();
    alive.sort_unstable();
    alive.dedup();
    let essential = alive
        .into_iter()
        .map(|id| PersistencePair {
            birth: identities[id].0,
            death: Death::Infinite,
            creator: identities[id].1,
        })
        .collect();
    PersistenceDiagram {
        finite_pairs,
        essential,
    }
}
