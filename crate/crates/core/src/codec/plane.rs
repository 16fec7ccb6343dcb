/// One 8-bit luma plane, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Plane {
    pub fn new(width: usize, height: usize, fill: u8) -> Self {
        Plane {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    /// `None` when `data` does not hold exactly `width * height` samples.
    pub fn from_vec(width: usize, height: usize, data: Vec<u8>) -> Option<Self> {
        (data.len() == width * height && width > 0 && height > 0).then_some(Plane {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Plane {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    /// Sample at `(x, y)` with coordinates clamped to the frame edge.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn same_size(&self, other: &Plane) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Mean squared error over the whole plane.
pub fn mse(a: &Plane, b: &Plane) -> f64 {
    assert!(a.same_size(b), "planes differ in size");
    sse_rect(a, b, 0, 0, a.width(), a.height()) as f64 / (a.width() * a.height()) as f64
}

/// Sum of squared differences over a rectangle.
pub fn sse_rect(a: &Plane, b: &Plane, x0: usize, y0: usize, w: usize, h: usize) -> u64 {
    let mut acc = 0u64;
    for y in y0..y0 + h {
        let ra = &a.row(y)[x0..x0 + w];
        let rb = &b.row(y)[x0..x0 + w];
        acc += ra
            .iter()
            .zip(rb)
            .map(|(&p, &q)| {
                let d = i32::from(p) - i32::from(q);
                (d * d) as u64
            })
            .sum::<u64>();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamped_access_and_sse() {
        let p = Plane::from_fn(4, 3, |x, y| (10 * y + x) as u8);
        assert_eq!(p.get_clamped(-5, 1), 10);
        assert_eq!(p.get_clamped(9, 9), 23);
        let q = Plane::new(4, 3, 0);
        assert_eq!(sse_rect(&p, &q, 3, 2, 1, 1), 23 * 23);
        assert!(Plane::from_vec(2, 2, vec![0; 3]).is_none());
    }
}
