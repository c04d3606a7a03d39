from scriptmix.synthdata.profiles import ScriptProfile, make_overlap_scripts, glyph_char, char_glyph
from scriptmix.synthdata.render import render_line, read_pgm, write_pgm
from scriptmix.synthdata.pipeline import AugmentConfig, augment, preprocess, reverse_labels
from scriptmix.synthdata.corpus import TextLineSample, generate_corpus, load_manifest, ManifestRow

__all__ = [
    "ScriptProfile",
    "make_overlap_scripts",
    "glyph_char",
    "char_glyph",
    "render_line",
    "read_pgm",
    "write_pgm",
    "AugmentConfig",
    "augment",
    "preprocess",
    "reverse_labels",
    "TextLineSample",
    "generate_corpus",
    "load_manifest",
    "ManifestRow",
]
