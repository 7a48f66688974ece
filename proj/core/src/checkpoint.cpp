#include "wavecast/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "wavecast/errors.hpp"
#include "wavecast/series.hpp"

namespace wavecast::autograd {

namespace {
constexpr const char *kMagic = "wavecast-checkpoint";
constexpr int kVersion = 1;
} // namespace

void Checkpoint::set(const std::string &key, const std::string &value) {
	if (key.empty() || key.find_first_of(" \t\n") != std::string::npos || value.find('\n') != std::string::npos) {
		throw InputError("checkpoint meta key/value may not contain whitespace/newlines: '" + key + "'");
	}
	for (auto &[k, v] : meta) {
		if (k == key) {
			v = value;
			return;
		}
	}
	meta.emplace_back(key, value);
}

const std::string &Checkpoint::get(const std::string &key) const {
	for (const auto &[k, v] : meta) {
		if (k == key) {
			return v;
		}
	}
	throw InputError("checkpoint has no meta entry '" + key + "'");
}

bool Checkpoint::has(const std::string &key) const {
	for (const auto &[k, v] : meta) {
		if (k == key) {
			return true;
		}
	}
	return false;
}

const Tensor &Checkpoint::tensor(const std::string &name) const {
	for (const auto &[n, t] : tensors) {
		if (n == name) {
			return t;
		}
	}
	throw InputError("checkpoint has no tensor '" + name + "'");
}

void write_checkpoint(std::ostream &out, const Checkpoint &checkpoint) {
	out << kMagic << ' ' << kVersion << '\n';
	for (const auto &[k, v] : checkpoint.meta) {
		out << "meta " << k << ' ' << v << '\n';
	}
	for (const auto &[name, t] : checkpoint.tensors) {
		out << "tensor " << name << ' ' << t.rank();
		for (auto d : t.shape()) {
			out << ' ' << d;
		}
		out << '\n';
		const auto data = t.data();
		for (std::size_t i = 0; i < data.size(); ++i) {
			out << (i ? " " : "") << format_double(data[i]);
		}
		out << '\n';
	}
	out << "end\n";
}

Checkpoint read_checkpoint(std::istream &in) {
	std::string line;
	if (!std::getline(in, line)) {
		throw InputError("empty checkpoint");
	}
	{
		std::istringstream header(line);
		std::string magic;
		int version = 0;
		header >> magic >> version;
		if (magic != kMagic || version != kVersion) {
			throw InputError("not a version-1 wavecast checkpoint");
		}
	}

	Checkpoint checkpoint;
	std::size_t line_no = 1;
	while (std::getline(in, line)) {
		++line_no;
		if (line == "end") {
			return checkpoint;
		}
		const auto space = line.find(' ');
		const std::string kind = line.substr(0, space);
		if (kind == "meta") {
			const auto rest = line.substr(space + 1);
			const auto split = rest.find(' ');
			checkpoint.meta.emplace_back(rest.substr(0, split), split == std::string::npos ? "" : rest.substr(split + 1));
		} else if (kind == "tensor") {
			std::istringstream spec(line.substr(space + 1));
			std::string name;
			std::size_t rank = 0;
			spec >> name >> rank;
			Shape shape(rank);
			for (auto &d : shape) {
				spec >> d;
			}
			if (!spec) {
				throw InputError("checkpoint line " + std::to_string(line_no) + ": malformed tensor header");
			}
			std::string values_line;
			if (!std::getline(in, values_line)) {
				throw InputError("checkpoint truncated in tensor '" + name + "'");
			}
			++line_no;
			std::vector<double> values;
			values.reserve(element_count(shape));
			std::istringstream tokens(values_line);
			std::string token;
			while (tokens >> token) {
				double v = 0.0;
				if (!parse_double(token, v)) {
					throw InputError("checkpoint line " + std::to_string(line_no) + ": bad number '" + token + "'");
				}
				values.push_back(v);
			}
			if (values.size() != element_count(shape)) {
				throw InputError("checkpoint tensor '" + name + "' has " + std::to_string(values.size()) +
				                 " values for shape " + to_string(shape));
			}
			checkpoint.tensors.emplace_back(name, Tensor(std::move(shape), std::move(values)));
		} else {
			throw InputError("checkpoint line " + std::to_string(line_no) + ": unknown record '" + kind + "'");
		}
	}
	throw InputError("checkpoint truncated (missing 'end')");
}

void save_checkpoint(const std::filesystem::path &path, const Checkpoint &checkpoint) {
	std::ofstream out(path);
	if (!out) {
		throw InputError("cannot write checkpoint '" + path.string() + "'");
	}
	write_checkpoint(out, checkpoint);
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
	std::ifstream in(path);
	if (!in) {
		throw InputError("cannot open checkpoint '" + path.string() + "'");
	}
	return read_checkpoint(in);
}

} // namespace wavecast::autograd
