"""Render the same language under every style and lexicon combination."""

from gridlang import LexiconMode, Style, build_grammar, render_ebnf

for style in Style:
    for mode in LexiconMode:
        g = build_grammar(style, mode, seed=7)
        print(f"=== {style.value} / {mode.value} ===")
        print(render_ebnf(g))
        print()
