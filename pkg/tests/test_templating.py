"""Template engine: sections, inverted sections, variables, errors."""

from __future__ import annotations

import itertools

import pytest

from eventscribe.templating import (
    RenderError,
    Template,
    TemplateParseError,
    render,
)


class TestParsing:
    def test_required_vars_derived_from_body(self):
        t = Template("x", "{{a}} {{#s}}{{b}}{{/s}} {{^s}}{{c}}{{/s}}")
        assert t.required_vars == {"a", "b", "c"}

    def test_unbalanced_open_rejected(self):
        with pytest.raises(TemplateParseError):
            Template("x", "{{#s}} no close")

    def test_mismatched_close_rejected(self):
        with pytest.raises(TemplateParseError):
            Template("x", "{{#a}}{{/b}}")

    def test_stray_close_rejected(self):
        with pytest.raises(TemplateParseError):
            Template("x", "text {{/s}}")


class TestRendering:
    def test_golf_tuple_text_appears_verbatim(self):
        body = (
            "{{#input_prefix}}\n{{input_prefix}} {{input}}\n{{/input_prefix}}\n"
            "{{^input_prefix}}\n{{input}}\n{{/input_prefix}}\n"
        )
        tuple_text = "Golf Player1 is playing on hole 9 AND he is hitting from the Pine Straw"
        out = render(Template("golf", body), {"input_prefix": "input:", "input": tuple_text})
        assert tuple_text in out
        assert "input: " + tuple_text in out

    def test_empty_string_variable_renders_empty(self):
        assert render(Template("t", "{{x}}"), {"x": ""}) == ""

    def test_variables_substituted_verbatim(self):
        assert render(Template("t", "a {{x}} b"), {"x": "<raw & text>"}) == "a <raw & text> b"

    def test_missing_reachable_variable_names_it(self):
        with pytest.raises(RenderError) as err:
            render(Template("t", "{{present}} {{missing_one}}"), {"present": "v"})
        assert err.value.variable == "missing_one"

    def test_variable_inside_skipped_section_not_required(self):
        out = render(Template("t", "{{#flag}}{{hidden}}{{/flag}}ok"), {"flag": False})
        assert out == "ok"

    def test_truth_table_for_sections(self):
        # Oracle: enumerate present/absent x truthy/falsy over both section forms.
        body = "{{#s}}P{{/s}}{{^s}}N{{/s}}"
        template = Template("t", body)
        cases = {
            ("absent", None): "N",
            ("present", None): "N",
            ("present", False): "N",
            ("present", ""): "N",
            ("present", 0): "N",
            ("present", "x"): "P",
            ("present", True): "P",
            ("present", 7): "P",
        }
        for (presence, value), expected in cases.items():
            bindings = {} if presence == "absent" else {"s": value}
            assert render(template, bindings) == expected, (presence, value)

    def test_inverted_branch_emitted_when_prefix_absent(self):
        body = "{{#input_prefix}}{{input_prefix}} {{input}}{{/input_prefix}}{{^input_prefix}}{{input}}{{/input_prefix}}"
        out = render(Template("t", body), {"input": "bare tuple"})
        assert out == "bare tuple"

    def test_nested_sections(self):
        body = "{{#a}}A{{#b}}B{{/b}}{{^b}}nb{{/b}}{{/a}}"
        assert render(Template("t", body), {"a": 1, "b": 1}) == "AB"
        assert render(Template("t", body), {"a": 1}) == "Anb"
        assert render(Template("t", body), {}) == ""

    def test_render_total_on_shipped_templates(self):
        from eventscribe.prompts import builtin_templates

        bindings = {
            "instruction_prefix": "instruction:",
            "instruction": "i",
            "input_prefix": "input:",
            "input": "x",
            "examples": "e",
            "context_prefix": "context:",
            "context": "c",
            "avoid_topic_prefix": "avoid topic:",
            "avoid_topic": "violence",
            "output_prefix": "output:",
        }
        for scene, template in builtin_templates().items():
            for flags in itertools.product([True, False], repeat=2):
                b = dict(bindings)
                if not flags[0]:
                    b["context_prefix"] = ""
                if not flags[1]:
                    b["avoid_topic_prefix"] = ""
                out = render(template, b)
                assert "x" in out, scene
