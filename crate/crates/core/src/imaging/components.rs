use super::{BinaryImage, Blob, BoundingBox};

/// Per-pixel component labels (0 = background) together with the blob
/// statistics of every component. Label `k` corresponds to `blobs[k - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    pub blobs: Vec<Blob>,
}

impl LabelMap {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Mask of the pixels carrying `label`.
    pub fn mask_of(&self, label: u32) -> BinaryImage {
        BinaryImage {
            width: self.width,
            height: self.height,
            mask: self.labels.iter().map(|&l| l != 0 && l == label).collect(),
        }
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let next = parent[x as usize];
        parent[x as usize] = parent[next as usize];
        x = next;
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi as usize] = lo;
    }
}

#[derive(Clone)]
struct Accum {
    area: usize,
    sum_x: u64,
    sum_y: u64,
    bbox: BoundingBox,
    first: usize,
}

/// Two-pass 8-connected labelling with union-find.
///
/// Components are ordered by `(y_min, x_min)` of their bounding box, ties
/// broken by the raster index of their first pixel; labels follow that order
/// starting at 1.
pub fn label_components(bin: &BinaryImage) -> LabelMap {
    let (w, h) = (bin.width(), bin.height());
    let mask = bin.mask();
    let mut provisional = vec![0u32; w * h];
    // parent[0] is the unused background slot
    let mut parent: Vec<u32> = vec![0];

    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            if !mask[idx] {
                continue;
            }
            let mut current = 0u32;
            let mut neighbours = [0u32; 4];
            if x > 0 {
                neighbours[0] = provisional[idx - 1];
            }
            if y > 0 {
                let up = idx - w;
                if x > 0 {
                    neighbours[1] = provisional[up - 1];
                }
                neighbours[2] = provisional[up];
                if x + 1 < w {
                    neighbours[3] = provisional[up + 1];
                }
            }
            for &n in neighbours.iter().filter(|&&n| n != 0) {
                if current == 0 {
                    current = n;
                } else {
                    union(&mut parent, current, n);
                }
            }
            if current == 0 {
                current = parent.len() as u32;
                parent.push(current);
            }
            provisional[idx] = current;
        }
    }

    let mut accum: Vec<Option<Accum>> = vec![None; parent.len()];
    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            let p = provisional[idx];
            if p == 0 {
                continue;
            }
            let root = find(&mut parent, p);
            provisional[idx] = root;
            let a = accum[root as usize].get_or_insert(Accum {
                area: 0,
                sum_x: 0,
                sum_y: 0,
                bbox: BoundingBox {
                    x_min: x,
                    y_min: y,
                    x_max: x,
                    y_max: y,
                },
                first: idx,
            });
            a.area += 1;
            a.sum_x += x as u64;
            a.sum_y += y as u64;
            a.bbox.x_min = a.bbox.x_min.min(x);
            a.bbox.x_max = a.bbox.x_max.max(x);
            a.bbox.y_max = a.bbox.y_max.max(y);
        }
    }

    let mut roots: Vec<(u32, Accum)> = accum
        .into_iter()
        .enumerate()
        .filter_map(|(root, a)| a.map(|a| (root as u32, a)))
        .collect();
    roots.sort_by_key(|(_, a)| (a.bbox.y_min, a.bbox.x_min, a.first));

    let mut final_label = vec![0u32; parent.len()];
    let blobs = roots
        .iter()
        .enumerate()
        .map(|(i, (root, a))| {
            let label = i as u32 + 1;
            final_label[*root as usize] = label;
            Blob {
                label,
                area: a.area,
                centroid: (
                    a.sum_x as f64 / a.area as f64,
                    a.sum_y as f64 / a.area as f64,
                ),
                bbox: a.bbox,
            }
        })
        .collect();
    for l in &mut provisional {
        *l = final_label[*l as usize];
    }

    LabelMap {
        width: w,
        height: h,
        labels: provisional,
        blobs,
    }
}

/// All 8-connected foreground components with at least `min_area` pixels,
/// ordered by `(y_min, x_min)` and labelled contiguously from 1.
pub fn connected_components(bin: &BinaryImage, min_area: usize) -> Vec<Blob> {
    label_components(bin)
        .blobs
        .into_iter()
        .filter(|b| b.area >= min_area)
        .enumerate()
        .map(|(i, mut b)| {
            b.label = i as u32 + 1;
            b
        })
        .collect()
}
