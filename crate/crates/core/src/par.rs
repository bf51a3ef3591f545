//! Dispatch between the rayon data-parallel path and the sequential
//! fallback, depending on the `rayon` cargo feature.

macro_rules! if_rayon {
    ($rayon_value:expr, $else_value:expr) => {{
        #[cfg(feature = "rayon")]
        {
            $rayon_value
        }
        #[cfg(not(feature = "rayon"))]
        {
            $else_value
        }
    }};
}

pub(crate) use if_rayon;
