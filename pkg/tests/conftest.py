from __future__ import annotations

import pytest

from webskills import sim
from webskills.dsl import parse_skill_file
from webskills.library import empty_library, register_implementation, register_interface

TOY_INTERFACE = """
interface AbstractShopping category shopping {
  abstract search(query) "find products";
  abstract add_to_cart();
  abstract checkout();
  default skill buy_item(item) {
    call search(item)
    call add_to_cart()
    call checkout()
  }
}
"""

AMAZON = """
implementation AmazonImpl for AbstractShopping site amazon {
  skill search(query) { click(#q); type(#q, query); press("Enter") }
  skill add_to_cart() { click(#r0); click(#add) }
  skill checkout() { click(#cart); click(#pay) }
}
"""

WALMART = """
implementation WalmartImpl for AbstractShopping site walmart {
  skill search(query) { click(#box); type(#box, query); click(#go) }
  skill add_to_cart() { click(#first); click(#buy) }
}
"""


@pytest.fixture
def toy_library():
    lib = register_interface(empty_library(), parse_skill_file(TOY_INTERFACE))
    lib = register_implementation(lib, parse_skill_file(AMAZON))
    return register_implementation(lib, parse_skill_file(WALMART))


@pytest.fixture(scope="session")
def shop_sites():
    return sim.generate_site_family("shopping", 3, 42)


@pytest.fixture(scope="session")
def code_sites():
    return sim.generate_site_family("coding", 2, 7)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
