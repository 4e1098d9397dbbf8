"""Blur and parallel-beam CT forward operators."""

from .blur import (
    BlurOperator,
    DctSpectral,
    PsfKernel,
    apply_blur,
    blur_matrix,
    blur_matrix_row,
    dct_spectral_decomposition,
    default_kernel_size,
    devectorize,
    gaussian_psf,
    make_inverse_crime_free_data,
    vectorize,
)
from .phantoms import SHEPP_LOGAN_MODIFIED, ellipse_phantom, ellipse_sinogram, star_field
from .radon import (
    RadonOperator,
    SinogramGeometry,
    chord_length,
    chord_lengths,
    exact_cos_sin,
    radon_apply,
    radon_build,
)
