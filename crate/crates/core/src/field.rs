/// A flat array of 32-bit floats with optional logical dimensions.
///
/// This is the unit of collective payloads and codec input.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatField {
    data: Vec<f32>,
    dims: Option<Vec<usize>>,
}

impl FloatField {
    pub fn new(data: Vec<f32>) -> Self {
        Self { data, dims: None }
    }

    /// Attaches logical dimensions; their product must equal the length.
    pub fn with_dims(data: Vec<f32>, dims: Vec<usize>) -> Option<Self> {
        if dims.iter().product::<usize>() != data.len() {
            return None;
        }
        Some(Self { data, dims: Some(dims) })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn dims(&self) -> Option<&[usize]> {
        self.dims.as_deref()
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    /// Serializes as raw little-endian f32, the on-disk exchange format.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses raw little-endian f32 bytes; length must be a multiple of 4.
    pub fn from_le_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() % 4 != 0 {
            return None;
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Some(Self::new(data))
    }
}

impl From<Vec<f32>> for FloatField {
    fn from(data: Vec<f32>) -> Self {
        Self::new(data)
    }
}

impl std::ops::Deref for FloatField {
    type Target = [f32];
    fn deref(&self) -> &[f32] {
        &self.data
    }
}
