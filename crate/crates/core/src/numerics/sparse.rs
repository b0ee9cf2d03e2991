/// Binary sparsity pattern in CSR form, together with its transpose.
///
/// Values attached to a pattern are stored as a separate `nnz x 1` column in
/// entry order (row-major, columns ascending within a row). `transposed`
/// entries are ordered column-major and `transpose_entry[t]` gives the
/// row-major entry index of transposed entry `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsePattern {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    t_ptr: Vec<usize>,
    t_idx: Vec<usize>,
    t_entry: Vec<usize>,
}

impl SparsePattern {
    /// Builds from per-row column lists. Columns are sorted and deduplicated.
    pub fn from_rows(rows: usize, cols: usize, mut lists: Vec<Vec<usize>>) -> Self {
        assert_eq!(lists.len(), rows, "one column list per row");
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for list in lists.iter_mut() {
            list.sort_unstable();
            list.dedup();
            assert!(list.last().is_none_or(|&c| c < cols), "column index out of range");
            col_idx.extend_from_slice(list);
            row_ptr.push(col_idx.len());
        }

        let mut counts = vec![0usize; cols + 1];
        for &c in &col_idx {
            counts[c + 1] += 1;
        }
        for c in 0..cols {
            counts[c + 1] += counts[c];
        }
        let t_ptr = counts.clone();
        let mut fill = counts;
        let mut t_idx = vec![0; col_idx.len()];
        let mut t_entry = vec![0; col_idx.len()];
        for r in 0..rows {
            for e in row_ptr[r]..row_ptr[r + 1] {
                let c = col_idx[e];
                let slot = fill[c];
                t_idx[slot] = r;
                t_entry[slot] = e;
                fill[c] += 1;
            }
        }
        SparsePattern {
            rows,
            cols,
            row_ptr,
            col_idx,
            t_ptr,
            t_idx,
            t_entry,
        }
    }

    pub fn from_coo(rows: usize, cols: usize, entries: &[(usize, usize)]) -> Self {
        let mut lists = vec![Vec::new(); rows];
        for &(r, c) in entries {
            lists[r].push(c);
        }
        Self::from_rows(rows, cols, lists)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Entry index range of row `r`.
    pub fn row_range(&self, r: usize) -> std::ops::Range<usize> {
        self.row_ptr[r]..self.row_ptr[r + 1]
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.col_idx[self.row_range(r)]
    }

    pub fn col_of(&self, entry: usize) -> usize {
        self.col_idx[entry]
    }

    /// Row index of every entry, in entry order.
    pub fn entry_rows(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.rows {
            out.extend(std::iter::repeat_n(r, self.row_ptr[r + 1] - self.row_ptr[r]));
        }
        out
    }

    /// Rows present in column `c`, ascending.
    pub fn col(&self, c: usize) -> &[usize] {
        &self.t_idx[self.t_ptr[c]..self.t_ptr[c + 1]]
    }

    /// Row-major entry indices of column `c`, ordered by row.
    pub fn col_entries(&self, c: usize) -> &[usize] {
        &self.t_entry[self.t_ptr[c]..self.t_ptr[c + 1]]
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        self.row(r).binary_search(&c).is_ok()
    }

    /// Transposed pattern. Its entry `t` corresponds to entry
    /// `self.transpose_entry_map()[t]` of this pattern.
    pub fn transpose(&self) -> SparsePattern {
        let lists = (0..self.cols).map(|c| self.col(c).to_vec()).collect();
        SparsePattern::from_rows(self.cols, self.rows, lists)
    }

    pub fn transpose_entry_map(&self) -> &[usize] {
        &self.t_entry
    }

    /// `(row, col)` of every entry, in entry order.
    pub fn coo(&self) -> Vec<(usize, usize)> {
        self.entry_rows().into_iter().zip(self.col_idx.iter().copied()).collect()
    }

    /// Reorders per-entry values given in transposed-entry order into this
    /// pattern's entry order.
    pub fn from_transposed_order(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nnz()];
        for (t, &e) in self.t_entry.iter().enumerate() {
            out[e] = values[t];
        }
        out
    }
}
