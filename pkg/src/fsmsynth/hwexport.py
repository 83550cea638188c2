"""Render a RAM image as a truth table, a memory-initialization file and a ROM module.

Every renderer has a matching parser so that emitted files can be checked by
decoding them back into the RAM image they came from.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .machine import EncodingSpec, MealyMachine, RamImage, to_ram_image


class ExportError(ValueError):
    pass


_VERILOG_KEYWORDS = frozenset("""
always and assign begin buf case casex casez default defparam else end endcase
endfunction endmodule endtask for forever function if initial inout input integer
localparam module nand negedge nor not or output parameter posedge reg repeat
signed task wire while xor xnor logic
""".split())

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def _bin(value: int, width: int) -> str:
    return format(value, f"0{width}b")


def export_truth_table(ram: RamImage) -> str:
    a, d = ram.address_bits, ram.data_bits
    lines = [f"address[{a - 1}:0] data[{d - 1}:0]"]
    lines += [f"{_bin(addr, a)} {_bin(word, d)}" for addr, word in enumerate(ram.words)]
    return "\n".join(lines) + "\n"


def parse_truth_table(text: str) -> RamImage:
    lines = text.splitlines()
    m = re.fullmatch(r"address\[(\d+):0\] data\[(\d+):0\]", lines[0].strip()) if lines else None
    if not m:
        raise ExportError("missing truth-table header")
    a, d = int(m.group(1)) + 1, int(m.group(2)) + 1
    words = []
    for expected, line in enumerate(ln for ln in lines[1:] if ln.strip()):
        addr, word = line.split()
        if len(addr) != a or len(word) != d or int(addr, 2) != expected:
            raise ExportError(f"bad truth-table row {line!r}")
        words.append(int(word, 2))
    return RamImage(a, d, tuple(words))


def export_mif(ram: RamImage, comment: str | None = None) -> str:
    a, d = ram.address_bits, ram.data_bits
    lines = [f"-- {comment}"] if comment else []
    lines += [
        f"DEPTH = {ram.depth};",
        f"WIDTH = {d};",
        "ADDRESS_RADIX = BIN;",
        "DATA_RADIX = BIN;",
        "CONTENT",
        "BEGIN",
    ]
    lines += [f"{_bin(addr, a)} : {_bin(word, d)};" for addr, word in enumerate(ram.words)]
    lines.append("END;")
    return "\n".join(lines) + "\n"


def parse_mif(text: str) -> RamImage:
    body = "\n".join(ln.split("--", 1)[0] for ln in text.splitlines())
    depth = re.search(r"DEPTH\s*=\s*(\d+)\s*;", body)
    width = re.search(r"WIDTH\s*=\s*(\d+)\s*;", body)
    if not depth or not width:
        raise ExportError("memory-init file lacks DEPTH or WIDTH")
    for radix in ("ADDRESS_RADIX", "DATA_RADIX"):
        if not re.search(rf"{radix}\s*=\s*BIN\s*;", body):
            raise ExportError(f"only {radix} = BIN is supported")
    n, d = int(depth.group(1)), int(width.group(1))
    a = n.bit_length() - 1
    if 1 << a != n:
        raise ExportError("DEPTH must be a power of two")
    content = re.search(r"CONTENT\s+BEGIN(.*?)END\s*;", body, re.S)
    if not content:
        raise ExportError("memory-init file lacks CONTENT BEGIN ... END;")
    words = [0] * n
    for addr, word in re.findall(r"([01]+)\s*:\s*([01]+)\s*;", content.group(1)):
        words[int(addr, 2)] = int(word, 2)
    return RamImage(a, d, tuple(words))


def export_hdl(ram: RamImage, module_name: str, spec: EncodingSpec) -> str:
    """Synchronous Verilog ROM realization of the machine.

    The state register resets synchronously to 0; the outputs are read
    combinationally from the looked-up word.
    """
    if not _IDENT.match(module_name) or module_name in _VERILOG_KEYWORDS:
        raise ExportError(f"invalid module name {module_name!r}")
    if (ram.address_bits, ram.data_bits) != (spec.ram_address_bits, spec.ram_data_bits):
        raise ExportError("RAM image does not match encoding")
    t, x, y = spec.triggers, spec.input_bits, spec.output_bits
    a, d = ram.address_bits, ram.data_bits
    lines = [
        f"// Mealy machine realized as a {ram.depth}x{d} ROM lookup",
        f"// S={spec.states} T={t} x={x} y={y} address_bits={a} data_bits={d}",
        f"module {module_name} (",
        "    input  wire clk,",
        "    input  wire rst,",
        f"    input  wire [{x - 1}:0] in_bits,",
        f"    output wire [{y - 1}:0] out_bits",
        ");",
        f"    reg  [{t - 1}:0] state;",
        f"    reg  [{d - 1}:0] word;",
        f"    wire [{a - 1}:0] addr = {{state, in_bits}};",
        "",
        "    always @(*) begin",
        "        case (addr)",
    ]
    for addr, w in enumerate(ram.words):
        lines.append(f"            {a}'b{_bin(addr, a)}: word = {d}'b{_bin(w, d)};")
    lines += [
        f"            default: word = {d}'b{'0' * d};",
        "        endcase",
        "    end",
        "",
        f"    assign out_bits = word[{y - 1}:0];",
        "",
        "    always @(posedge clk) begin",
        "        if (rst)",
        f"            state <= {t}'d0;",
        "        else",
        f"            state <= word[{d - 1}:{y}];",
        "    end",
        "endmodule",
    ]
    return "\n".join(lines) + "\n"


def parse_hdl(text: str) -> RamImage:
    m = re.search(r"address_bits=(\d+) data_bits=(\d+)", text)
    if not m:
        raise ExportError("HDL header lacks address/data widths")
    a, d = int(m.group(1)), int(m.group(2))
    words = [0] * (1 << a)
    for addr, word in re.findall(rf"{a}'b([01]{{{a}}}): word = {d}'b([01]{{{d}}});", text):
        words[int(addr, 2)] = int(word, 2)
    return RamImage(a, d, tuple(words))


@dataclass(frozen=True)
class ExportBundle:
    truth_table_text: str
    mif_text: str
    hdl_text: str
    metadata: dict

    def write(self, out_dir, stem: str) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / f"{stem}.truth.txt", out / f"{stem}.mif", out / f"{stem}.v"]
        for path, text in zip(paths, (self.truth_table_text, self.mif_text, self.hdl_text)):
            path.write_text(text)
        return paths


def export_bundle(machine: MealyMachine, module_name: str = "fsm_rom") -> ExportBundle:
    spec = machine.spec
    ram = to_ram_image(machine, spec)
    meta = {"S": spec.states, "T": spec.triggers, "x": spec.input_bits, "y": spec.output_bits,
            "address_bits": ram.address_bits, "data_bits": ram.data_bits}
    comment = " ".join(f"{k}={v}" for k, v in meta.items())
    return ExportBundle(export_truth_table(ram), export_mif(ram, comment),
                        export_hdl(ram, module_name, spec), meta)
