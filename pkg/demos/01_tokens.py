"""Counting the tokens an LLM would consume for a code corpus.

Run: python demos/01_tokens.py
"""
# %%
import tempfile
from pathlib import Path

from carbon_ledger import (
    ConsumptionRateModel,
    Direction,
    TokenLedger,
    consumption_seconds,
    ledger_totals,
    scan_corpus,
    words_to_tokens,
)

# %% [markdown]
# A token is taken to be three quarters of a word, so 750 words are 1000
# tokens. Counts are rounded half-up to whole tokens.

# %%
for words in (750, 177, 80, 300, 150):
    print(f"{words:>4} words -> {words_to_tokens(words)} tokens")

# %% [markdown]
# Scan a small throwaway project. Prompts sent to the model count as input,
# generated code as output.

# %%
root = Path(tempfile.mkdtemp())
(root / "src").mkdir()
(root / "src" / "app.ts").write_text("export const add = (a: number, b: number) => a + b;\n")
(root / "src" / "util.ts").write_text("export function shout(s: string) { return s.toUpperCase() + '!'; }\n")
(root / "prompts.txt").write_text("Write a TypeScript helper that adds two numbers and another that shouts.\n")

prompts = scan_corpus(root, ["*.txt"], Direction.INPUT, "prompts")
code = scan_corpus(root, ["src/**/*.ts"], Direction.OUTPUT, "generated")
for s in (prompts, code):
    print(f"{s.label:<10} files={s.file_count} words={s.total_words} tokens={s.total_tokens}")

# %% [markdown]
# Consumption units turn tokens into compute seconds: 0.4 s per input token,
# 1.2 s per output token. The rates are exact fractions so splitting a corpus
# never changes the total.

# %%
ledger = TokenLedger((prompts, code))
tokens, cu = ledger_totals(ledger)
print(f"total tokens {tokens}, {float(cu):.1f} CU-seconds")
print("235 input tokens ->", consumption_seconds(235, Direction.INPUT), "CU-s")
print("200 output tokens ->", consumption_seconds(200, Direction.OUTPUT), "CU-s")

# a cheaper model, passed explicitly
cheap = ConsumptionRateModel("0.1", "0.3")
print("with cheaper rates:", float(ledger_totals(ledger, cheap)[1]), "CU-s")
