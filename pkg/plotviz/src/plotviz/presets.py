"""Panel layouts for the shipped figure reproductions."""

from __future__ import annotations

from .figspec import Curve, FigureSpec, Panel

_DETUNING = "mode-2 detuning (g1)"
_ETA = "pump rate (g1)"


def fig2() -> FigureSpec:
    return FigureSpec(
        name="fig2", xlabel=_DETUNING,
        panels=(
            Panel("a", "collective QD populations", "value", (
                Curve("pop_ee", "|e,e>"), Curve("pop_eg", "|e,g>"),
                Curve("pop_ge", "|g,e>"), Curve("pop_gg", "|g,g>")),
                "population"),
            Panel("b", "mean photon numbers", "value", (
                Curve("n1", "mode 1"), Curve("n2", "mode 2")), "<n>"),
            Panel("c", "inter-mode coherence", "value", (
                Curve("mag", "|<a1+ a2>|", parts=("re_cross", "im_cross")),),
                "|<a1+ a2>|"),
            Panel("d", "zero-delay correlations", "value", (
                Curve("g11", "g11(0)"), Curve("g22", "g22(0)"),
                Curve("g12", "g12(0)")), "g2(0)"),
        ))


def fig3() -> FigureSpec:
    return FigureSpec(
        name="fig3", xlabel=_DETUNING,
        panels=(
            Panel("a", "radiance witness", "value", (
                Curve("rw1", "RW1"), Curve("rw2", "RW2")), "RW"),
            Panel("b", "single-photon EER", "value", (
                Curve("N1", "N1 (mode 1)"), Curve("M1", "M1 (mode 2)")), "EER (g1)"),
            Panel("c", "two-mode two-photon EER", "value", (
                Curve("N1M1", "N1M1"),), "EER (g1)"),
        ))


def fig4a() -> FigureSpec:
    return FigureSpec(
        name="fig4a", xlabel="cavity decay rate (g1)",
        panels=(
            Panel("a", "radiance witness vs cavity decay", "value", (
                Curve("rw1", "RW1"),), "RW"),
        ))


def fig4bc() -> FigureSpec:
    return FigureSpec(
        name="fig4bc", xlabel="temperature (K)",
        panels=(
            Panel("b", "radiance witness vs temperature", "value", (
                Curve("rw1", "RW1"), Curve("rw2", "RW2")), "RW"),
            Panel("c", "excess emission rates", "value", (
                Curve("N1", "N1"), Curve("M1", "M1"), Curve("N1M1", "N1M1")),
                "EER (g1)"),
        ))


def fig5() -> FigureSpec:
    return FigureSpec(
        name="fig5", xlabel=_ETA,
        panels=(
            Panel("a", "radiance witness vs pump", "value", (
                Curve("rw1", "RW1"),), "RW"),
            Panel("b", "emission linewidth vs pump", "value", (
                Curve("linewidth1", "mode 1"), Curve("linewidth2", "mode 2")),
                "linewidth (g1)"),
        ))


def fig6() -> FigureSpec:
    return FigureSpec(
        name="fig6", xlabel=_ETA,
        panels=(
            Panel("a", "radiance witness, resonant cavity", "value", (
                Curve("rw1", "RW1"), Curve("rw2", "RW2")), "RW"),
        ))


PRESETS = {"fig2": fig2, "fig3": fig3, "fig4a": fig4a, "fig4bc": fig4bc,
           "fig5": fig5, "fig6": fig6}
