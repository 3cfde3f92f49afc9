/// The six timing categories of the per-rank breakdown: codec time,
/// allgather-stage transfer, local copies, non-overlapped waits,
/// reduction arithmetic, and everything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    ComDecom,
    Allgather,
    Memcpy,
    Wait,
    Reduction,
    Others,
}

pub const CATEGORIES: [Category; 6] = [
    Category::ComDecom,
    Category::Allgather,
    Category::Memcpy,
    Category::Wait,
    Category::Reduction,
    Category::Others,
];

impl Category {
    pub fn index(self) -> usize {
        match self {
            Category::ComDecom => 0,
            Category::Allgather => 1,
            Category::Memcpy => 2,
            Category::Wait => 3,
            Category::Reduction => 4,
            Category::Others => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::ComDecom => "ComDecom",
            Category::Allgather => "Allgather",
            Category::Memcpy => "Memcpy",
            Category::Wait => "Wait",
            Category::Reduction => "Reduction",
            Category::Others => "Others",
        }
    }
}

/// Per-rank counters and timing breakdown. Times are virtual seconds in
/// virtual-time mode, wall seconds in real-time mode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankReport {
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub compress_calls: u64,
    pub decompress_calls: u64,
    times: [f64; 6],
    pub total_elapsed: f64,
}

impl RankReport {
    pub fn add_time(&mut self, category: Category, seconds: f64) {
        self.times[category.index()] += seconds;
    }

    pub fn time(&self, category: Category) -> f64 {
        self.times[category.index()]
    }

    pub fn category_sum(&self) -> f64 {
        self.times.iter().sum()
    }
}

/// Per-rank reports for one collective run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub per_rank: Vec<RankReport>,
}

impl RunReport {
    pub fn size(&self) -> usize {
        self.per_rank.len()
    }

    pub fn total_bytes_sent(&self) -> u64 {
        self.per_rank.iter().map(|r| r.bytes_sent).sum()
    }

    pub fn total_bytes_received(&self) -> u64 {
        self.per_rank.iter().map(|r| r.bytes_received).sum()
    }

    pub fn total_compress_calls(&self) -> u64 {
        self.per_rank.iter().map(|r| r.compress_calls).sum()
    }

    pub fn total_decompress_calls(&self) -> u64 {
        self.per_rank.iter().map(|r| r.decompress_calls).sum()
    }

    pub fn max_time(&self, category: Category) -> f64 {
        self.per_rank
            .iter()
            .map(|r| r.time(category))
            .fold(0.0, f64::max)
    }

    /// Longest per-rank elapsed time; the completion time of the collective.
    pub fn makespan(&self) -> f64 {
        self.per_rank
            .iter()
            .map(|r| r.total_elapsed)
            .fold(0.0, f64::max)
    }
}
