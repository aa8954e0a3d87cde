#!/usr/bin/env python3
r"""Seq2seq engine for the `command` backend of absa-core.

    seq2seq_backend.py train --data train.jsonl --hparams hparams.json \
        --checkpoint DIR --base allenai/tk-instruct-base-def-pos
    seq2seq_backend.py predict --checkpoint DIR --inputs in.jsonl --out out.jsonl \
        --max-output-length 128 --num-beams 1

Training lines are {"input", "target"}; prediction lines are {"input"} and
one {"output"} line is written per input, in order. Optimizer, schedule and
weight decay are left at the Trainer defaults and written to
train_report.json so they end up in the run manifest.
"""

import argparse
import json
import sys
from pathlib import Path


def read_jsonl(path):
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def train(args):
    import torch
    from datasets import Dataset
    from transformers import (
        AutoModelForSeq2SeqLM,
        AutoTokenizer,
        DataCollatorForSeq2Seq,
        Seq2SeqTrainer,
        Seq2SeqTrainingArguments,
        set_seed,
    )

    hp = json.loads(Path(args.hparams).read_text())
    set_seed(hp["seed"])
    tokenizer = AutoTokenizer.from_pretrained(args.base)
    model = AutoModelForSeq2SeqLM.from_pretrained(args.base)

    rows = read_jsonl(args.data)
    dataset = Dataset.from_list(rows)

    def encode(batch):
        enc = tokenizer(batch["input"], max_length=args.max_input_length, truncation=True)
        enc["labels"] = tokenizer(text_target=batch["target"], max_length=hp["max_output_length"], truncation=True)[
            "input_ids"
        ]
        return enc

    dataset = dataset.map(encode, batched=True, remove_columns=["input", "target"])
    out_dir = Path(args.checkpoint)
    training_args = Seq2SeqTrainingArguments(
        output_dir=str(out_dir / "trainer"),
        learning_rate=hp["learning_rate"],
        per_device_train_batch_size=hp["train_batch_size"],
        gradient_accumulation_steps=hp["gradient_accumulation_steps"],
        num_train_epochs=hp["epochs"],
        seed=hp["seed"],
        save_strategy="no",
        logging_steps=10,
        report_to=[],
        fp16=torch.cuda.is_available(),
    )
    trainer = Seq2SeqTrainer(
        model=model,
        args=training_args,
        train_dataset=dataset,
        data_collator=DataCollatorForSeq2Seq(tokenizer, model=model),
    )
    result = trainer.train()
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)

    losses = [h["loss"] for h in trainer.state.log_history if "loss" in h]
    report = {
        "steps": trainer.state.global_step,
        "final_loss": losses[-1] if losses else result.training_loss,
        "optimizer": {
            "name": getattr(training_args.optim, "value", training_args.optim),
            "weight_decay": training_args.weight_decay,
            "adam_beta1": training_args.adam_beta1,
            "adam_beta2": training_args.adam_beta2,
            "adam_epsilon": training_args.adam_epsilon,
            "lr_scheduler": getattr(training_args.lr_scheduler_type, "value", training_args.lr_scheduler_type),
            "warmup_steps": training_args.warmup_steps,
            "warmup_ratio": training_args.warmup_ratio,
            "max_grad_norm": training_args.max_grad_norm,
            "fp16": training_args.fp16,
        },
    }
    (out_dir / "train_report.json").write_text(json.dumps(report, indent=2))


def predict(args):
    import torch
    from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

    device = "cuda" if torch.cuda.is_available() else "cpu"
    tokenizer = AutoTokenizer.from_pretrained(args.checkpoint)
    model = AutoModelForSeq2SeqLM.from_pretrained(args.checkpoint).to(device).eval()
    inputs = [row["input"] for row in read_jsonl(args.inputs)]

    outputs = []
    for start in range(0, len(inputs), args.batch_size):
        batch = inputs[start : start + args.batch_size]
        enc = tokenizer(batch, max_length=args.max_input_length, truncation=True, padding=True, return_tensors="pt")
        with torch.no_grad():
            generated = model.generate(
                **enc.to(device),
                max_new_tokens=args.max_output_length,
                num_beams=args.num_beams,
                do_sample=False,
            )
        outputs.extend(tokenizer.batch_decode(generated, skip_special_tokens=True))

    with open(args.out, "w", encoding="utf-8") as f:
        for text in outputs:
            f.write(json.dumps({"output": text}) + "\n")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="verb", required=True)

    t = sub.add_parser("train")
    t.add_argument("--data", required=True)
    t.add_argument("--hparams", required=True)
    t.add_argument("--checkpoint", required=True)
    t.add_argument("--base", required=True)
    t.add_argument("--max-input-length", type=int, default=512)

    p = sub.add_parser("predict")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--inputs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-output-length", type=int, default=128)
    p.add_argument("--num-beams", type=int, default=1)
    p.add_argument("--max-input-length", type=int, default=512)
    p.add_argument("--batch-size", type=int, default=16)

    args = parser.parse_args(argv)
    {"train": train, "predict": predict}[args.verb](args)


if __name__ == "__main__":
    sys.exit(main())
