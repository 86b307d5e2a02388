use super::Voltage;

/// Intended program level of an SLC cell. S1 stores binary `0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Level {
    #[default]
    S0,
    S1,
}

impl Level {
    /// Data bit stored by this level.
    pub fn bit(self) -> bool {
        matches!(self, Level::S0)
    }

    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Level::S0
        } else {
            Level::S1
        }
    }
}

/// Block dimensions: word lines × bit lines × string-select-line groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub wl: usize,
    pub bl: usize,
    pub ssl: usize,
}

impl Dims {
    pub fn new(wl: usize, bl: usize, ssl: usize) -> Self {
        Self { wl, bl, ssl }
    }

    /// Single SSL group.
    pub fn planar(wl: usize, bl: usize) -> Self {
        Self { wl, bl, ssl: 1 }
    }

    pub fn cells(&self) -> usize {
        self.wl * self.bl * self.ssl
    }

    pub fn pages(&self) -> usize {
        self.wl * self.ssl
    }
}

/// One page: the cells of a word line within one SSL group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Page {
    pub wl: usize,
    pub ssl: usize,
}

impl Page {
    pub fn new(wl: usize, ssl: usize) -> Self {
        Self { wl, ssl }
    }
}

impl From<usize> for Page {
    /// Word line `wl` of SSL group 0.
    fn from(wl: usize) -> Self {
        Self { wl, ssl: 0 }
    }
}

/// Analog state of one erase block.
///
/// Storage is SSL-major, then word line, then bit line, so each page is a
/// contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid<V> {
    pub(crate) dims: Dims,
    pub(crate) voltage: Vec<V>,
    pub(crate) program_shift: Vec<V>,
    pub(crate) intended: Vec<Level>,
    pub(crate) written: Vec<bool>,
}

impl<V: Voltage> CellGrid<V> {
    /// A grid with every cell at `v` and nothing written.
    pub fn uniform(dims: Dims, v: V) -> Self {
        Self {
            dims,
            voltage: vec![v; dims.cells()],
            program_shift: vec![V::zero(); dims.cells()],
            intended: vec![Level::S0; dims.cells()],
            written: vec![false; dims.pages()],
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    fn page_index(&self, page: Page) -> usize {
        assert!(page.wl < self.dims.wl && page.ssl < self.dims.ssl, "page {page:?} outside {:?}", self.dims);
        page.ssl * self.dims.wl + page.wl
    }

    fn range(&self, page: Page) -> std::ops::Range<usize> {
        let start = self.page_index(page) * self.dims.bl;
        start..start + self.dims.bl
    }

    pub fn voltages(&self, page: impl Into<Page>) -> &[V] {
        let r = self.range(page.into());
        &self.voltage[r]
    }

    pub fn voltages_mut(&mut self, page: impl Into<Page>) -> &mut [V] {
        let r = self.range(page.into());
        &mut self.voltage[r]
    }

    /// Cumulative program shift since erase.
    pub fn program_shifts(&self, page: impl Into<Page>) -> &[V] {
        let r = self.range(page.into());
        &self.program_shift[r]
    }

    pub fn intended(&self, page: impl Into<Page>) -> &[Level] {
        let r = self.range(page.into());
        &self.intended[r]
    }

    pub fn is_written(&self, page: impl Into<Page>) -> bool {
        self.written[self.page_index(page.into())]
    }

    pub(crate) fn mark_written(&mut self, page: Page) {
        let i = self.page_index(page);
        self.written[i] = true;
    }

    pub(crate) fn page_parts_mut(&mut self, page: Page) -> (&mut [V], &mut [V], &mut [Level]) {
        let r = self.range(page);
        (&mut self.voltage[r.clone()], &mut self.program_shift[r.clone()], &mut self.intended[r])
    }

    /// All cell voltages, SSL-major then word line then bit line.
    pub fn all_voltages(&self) -> &[V] {
        &self.voltage
    }
}
